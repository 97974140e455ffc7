#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "marbayes/sampler.hpp"

namespace marbayes {

struct DensityGrid {
  std::vector<double> abscissae;
  std::vector<double> ordinates;

  // Trapezoid rule over the grid.
  double integral() const;
};

inline constexpr std::size_t kGridPoints = 512;

struct ParameterSummary {
  std::string name;
  double posterior_mean = 0.0;
  double standard_error = 0.0;  // chain standard deviation
  std::pair<double, double> hpdr_90;
  double hd_value = 0.0;
};

// Silverman's rule: 0.9 min(sd, IQR / 1.34) n^(-1/5). Falls back to sd (or
// IQR) when the other is zero; 0 for a constant sample.
double silverman_bandwidth(std::span<const double> draws);

// Shortest interval [x_i, x_{i+m-1}] on the sorted draws with
// m = ceil(mass * n). Ties keep the leftmost.
std::pair<double, double> hpd_interval(std::span<const double> draws, double mass = 0.9);

// Gaussian KDE on `points` equally spaced values in [l, u]. Throws
// std::invalid_argument when u <= l or draws is empty.
DensityGrid density_grid(std::span<const double> draws, double l, double u,
                         std::size_t points = kGridPoints);

// Throws std::invalid_argument on fewer than 100 draws.
ParameterSummary summarize(std::span<const double> draws, std::string name = {});

// Pointwise mean. Grids must share their abscissae.
DensityGrid average_density(std::span<const DensityGrid> grids);

// Scalar traces of a fixed-order chain: pi_k, mu_k and shift_k (unless
// fixed_shift), phi_k_j, sigma_k with 1-based k and j. Throws when orders vary across draws.
struct ParameterTrace {
  std::string name;
  std::vector<double> values;
};
std::vector<ParameterTrace> parameter_traces(const ChainOutput& output, bool fixed_shift);

}  // namespace marbayes
