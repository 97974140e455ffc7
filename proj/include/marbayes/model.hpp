#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "marbayes/random.hpp"

namespace marbayes {

// Indexing convention used throughout the library: components are 0-based
// (k in [0, g)) and time points are 0-based positions into the series, so the
// conditional distribution of y_t is defined for max_order() <= t < n.

/// Full parameterisation of a Gaussian MAR(g; p_1, ..., p_g) model.
///
/// The order of component k is `ar[k].size()`. Coefficients beyond a
/// component's own order are treated as zero by the accessors and are never
/// stored. Shifts are the canonical location storage; component means are
/// derived and may be undefined for unit-root components.
struct MARSpec {
  std::vector<double> weights;
  std::vector<double> shifts;
  std::vector<std::vector<double>> ar;
  std::vector<double> scales;

  // Builds and validates; throws std::invalid_argument on any violated
  // invariant.
  static MARSpec make(std::vector<double> weights, std::vector<double> shifts,
                      std::vector<std::vector<double>> ar, std::vector<double> scales);

  void validate() const;

  std::size_t components() const { return weights.size(); }
  std::size_t order(std::size_t k) const { return ar.at(k).size(); }
  std::vector<std::size_t> orders() const;
  std::size_t max_order() const;

  // phi_{k,lag} for lag in 1..max_order(); zero past the component's order.
  double ar_coeff(std::size_t k, std::size_t lag) const;
  double ar_sum(std::size_t k) const;
  double precision(std::size_t k) const;
  // mu_k = phi_{k0} / (1 - sum phi_{ki}); nullopt when the denominator is
  // numerically zero (unit-root component).
  std::optional<double> mean(std::size_t k) const;
};

// Shift implied by a component mean: phi_{k0} = mu_k (1 - sum phi_{ki}).
double shift_from_mean(double mean, std::span<const double> ar);

struct TimeSeries {
  std::vector<double> values;

  TimeSeries() = default;
  explicit TimeSeries(std::vector<double> v);
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t t) const { return values[t]; }
};

/// Component labels z_t for t = offset, ..., n-1.
struct LatentAllocation {
  std::size_t offset = 0;
  std::vector<int> labels;
  std::vector<std::size_t> counts;

  LatentAllocation() = default;
  LatentAllocation(std::size_t offset, std::vector<int> labels, std::size_t g);

  int label_at(std::size_t t) const { return labels[t - offset]; }
  std::size_t end() const { return offset + labels.size(); }
  // Drops labels for t < new_offset, keeping counts consistent.
  void trim_front(std::size_t new_offset);
};

struct ConditionalMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// nu_{tk} evaluated from an explicit history; `past.back()` is y_{t-1}.
double component_location(const MARSpec& spec, std::size_t k, std::span<const double> past);

double component_residual(const MARSpec& spec, const TimeSeries& series, std::size_t k,
                          std::size_t t);

// Log of the mixture density of y_t given the past, evaluated at `value`
// (which need not be the observed y_t). Computed by log-sum-exp.
double log_conditional_pdf_at(const MARSpec& spec, std::span<const double> past, double value);
double log_conditional_pdf(const MARSpec& spec, const TimeSeries& series, std::size_t t);
double conditional_pdf(const MARSpec& spec, const TimeSeries& series, std::size_t t);
double conditional_cdf_at(const MARSpec& spec, std::span<const double> past, double value);
double conditional_cdf(const MARSpec& spec, const TimeSeries& series, std::size_t t);
ConditionalMoments conditional_moments(const MARSpec& spec, const TimeSeries& series,
                                       std::size_t t);

// Sum over t = p..n-1 of the log mixture density; the first p observations
// are conditioned on. Throws std::domain_error if the result is not finite.
double log_likelihood(const MARSpec& spec, const TimeSeries& series);
double complete_data_log_likelihood(const MARSpec& spec, const TimeSeries& series,
                                    const LatentAllocation& alloc);

// rho_0..rho_{h_max}. Throws std::domain_error when the lag system is singular.
std::vector<double> theoretical_acf(const MARSpec& spec, std::size_t h_max);

// Draws component k_t ~ pi and y_t = nu_{t,k_t} + sigma_{k_t} * N(0, 1),
// starting from p zeros and discarding `burn` points. Refuses unstable specs.
TimeSeries simulate_path(const MARSpec& spec, std::size_t n, Rng& rng, std::size_t burn = 500);
TimeSeries simulate_path(const MARSpec& spec, std::size_t n, std::uint64_t seed,
                         std::size_t burn = 500);

}  // namespace marbayes
