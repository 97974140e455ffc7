#include "marbayes/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "marbayes/stability.hpp"

namespace marbayes {

namespace {

constexpr double kUnitRootTolerance = 1e-12;

void check_time(const MARSpec& spec, const TimeSeries& series, std::size_t t) {
  if (t < spec.max_order() || t >= series.size()) {
    std::ostringstream msg;
    msg << "time index " << t << " outside [" << spec.max_order() << ", " << series.size() << ")";
    throw std::out_of_range(msg.str());
  }
}

std::span<const double> past_of(const TimeSeries& series, std::size_t t) {
  return std::span<const double>(series.values.data(), t);
}

}  // namespace

MARSpec MARSpec::make(std::vector<double> weights, std::vector<double> shifts,
                      std::vector<std::vector<double>> ar, std::vector<double> scales) {
  MARSpec spec{std::move(weights), std::move(shifts), std::move(ar), std::move(scales)};
  spec.validate();
  return spec;
}

void MARSpec::validate() const {
  const std::size_t g = weights.size();
  if (g < 1) throw std::invalid_argument("MARSpec: at least one component required");
  if (shifts.size() != g || ar.size() != g || scales.size() != g) {
    throw std::invalid_argument("MARSpec: weights, shifts, ar and scales must have length g");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("MARSpec: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("MARSpec: weights must sum to one");
  }
  for (std::size_t k = 0; k < g; ++k) {
    if (!(scales[k] > 0.0) || !std::isfinite(scales[k])) {
      throw std::invalid_argument("MARSpec: scales must be positive and finite");
    }
    if (ar[k].empty()) throw std::invalid_argument("MARSpec: every order must be >= 1");
    if (!std::isfinite(shifts[k])) throw std::invalid_argument("MARSpec: shift not finite");
    for (double c : ar[k]) {
      if (!std::isfinite(c)) throw std::invalid_argument("MARSpec: AR coefficient not finite");
    }
  }
}

std::vector<std::size_t> MARSpec::orders() const {
  std::vector<std::size_t> out;
  out.reserve(ar.size());
  for (const auto& c : ar) out.push_back(c.size());
  return out;
}

std::size_t MARSpec::max_order() const {
  std::size_t p = 0;
  for (const auto& c : ar) p = std::max(p, c.size());
  return p;
}

double MARSpec::ar_coeff(std::size_t k, std::size_t lag) const {
  const auto& c = ar.at(k);
  if (lag == 0) throw std::out_of_range("ar_coeff: lags start at 1");
  return lag <= c.size() ? c[lag - 1] : 0.0;
}

double MARSpec::ar_sum(std::size_t k) const {
  const auto& c = ar.at(k);
  return std::accumulate(c.begin(), c.end(), 0.0);
}

double MARSpec::precision(std::size_t k) const { return 1.0 / (scales.at(k) * scales.at(k)); }

std::optional<double> MARSpec::mean(std::size_t k) const {
  const double b = 1.0 - ar_sum(k);
  if (std::abs(b) < kUnitRootTolerance) return std::nullopt;
  return shifts.at(k) / b;
}

double shift_from_mean(double mean, std::span<const double> ar) {
  return mean * (1.0 - std::accumulate(ar.begin(), ar.end(), 0.0));
}

TimeSeries::TimeSeries(std::vector<double> v) : values(std::move(v)) {
  for (double x : values) {
    if (!std::isfinite(x)) throw std::invalid_argument("TimeSeries: values must be finite");
  }
}

LatentAllocation::LatentAllocation(std::size_t offset_, std::vector<int> labels_, std::size_t g)
    : offset(offset_), labels(std::move(labels_)), counts(g, 0) {
  for (int z : labels) {
    if (z < 0 || static_cast<std::size_t>(z) >= g) {
      throw std::out_of_range("LatentAllocation: label out of range");
    }
    ++counts[static_cast<std::size_t>(z)];
  }
}

void LatentAllocation::trim_front(std::size_t new_offset) {
  if (new_offset <= offset) return;
  const std::size_t drop = std::min(new_offset - offset, labels.size());
  for (std::size_t i = 0; i < drop; ++i) --counts[static_cast<std::size_t>(labels[i])];
  labels.erase(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(drop));
  offset = new_offset;
}

double component_location(const MARSpec& spec, std::size_t k, std::span<const double> past) {
  const auto& c = spec.ar.at(k);
  if (past.size() < c.size()) throw std::out_of_range("component_location: history too short");
  double nu = spec.shifts[k];
  const std::size_t last = past.size() - 1;
  for (std::size_t i = 0; i < c.size(); ++i) nu += c[i] * past[last - i];
  return nu;
}

double component_residual(const MARSpec& spec, const TimeSeries& series, std::size_t k,
                          std::size_t t) {
  if (k >= spec.components()) throw std::out_of_range("component index out of range");
  check_time(spec, series, t);
  return series[t] - component_location(spec, k, past_of(series, t));
}

double log_conditional_pdf_at(const MARSpec& spec, std::span<const double> past, double value) {
  const std::size_t g = spec.components();
  double terms[16];
  std::vector<double> heap;
  double* buf = terms;
  if (g > 16) {
    heap.resize(g);
    buf = heap.data();
  }
  for (std::size_t k = 0; k < g; ++k) {
    buf[k] = std::log(spec.weights[k]) +
             log_normal_pdf(value, component_location(spec, k, past), spec.scales[k]);
  }
  return log_sum_exp(std::span<const double>(buf, g));
}

double log_conditional_pdf(const MARSpec& spec, const TimeSeries& series, std::size_t t) {
  check_time(spec, series, t);
  return log_conditional_pdf_at(spec, past_of(series, t), series[t]);
}

double conditional_pdf(const MARSpec& spec, const TimeSeries& series, std::size_t t) {
  return std::exp(log_conditional_pdf(spec, series, t));
}

double conditional_cdf_at(const MARSpec& spec, std::span<const double> past, double value) {
  double out = 0.0;
  for (std::size_t k = 0; k < spec.components(); ++k) {
    out += spec.weights[k] *
           normal_cdf((value - component_location(spec, k, past)) / spec.scales[k]);
  }
  return out;
}

double conditional_cdf(const MARSpec& spec, const TimeSeries& series, std::size_t t) {
  check_time(spec, series, t);
  return conditional_cdf_at(spec, past_of(series, t), series[t]);
}

ConditionalMoments conditional_moments(const MARSpec& spec, const TimeSeries& series,
                                       std::size_t t) {
  check_time(spec, series, t);
  const auto past = past_of(series, t);
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t k = 0; k < spec.components(); ++k) {
    const double mu = component_location(spec, k, past);
    mean += spec.weights[k] * mu;
    second += spec.weights[k] * (spec.scales[k] * spec.scales[k] + mu * mu);
  }
  return {mean, second - mean * mean};
}

double log_likelihood(const MARSpec& spec, const TimeSeries& series) {
  const std::size_t p = spec.max_order();
  if (series.size() <= p) throw std::invalid_argument("log_likelihood: series shorter than p+1");
  double total = 0.0;
  for (std::size_t t = p; t < series.size(); ++t) {
    total += log_conditional_pdf_at(spec, past_of(series, t), series[t]);
  }
  if (!std::isfinite(total)) throw std::domain_error("log_likelihood: non-finite value");
  return total;
}

double complete_data_log_likelihood(const MARSpec& spec, const TimeSeries& series,
                                    const LatentAllocation& alloc) {
  const std::size_t p = spec.max_order();
  if (alloc.offset != p || alloc.end() != series.size()) {
    throw std::invalid_argument("complete_data_log_likelihood: allocation does not cover p..n-1");
  }
  double total = 0.0;
  for (std::size_t t = p; t < series.size(); ++t) {
    const auto k = static_cast<std::size_t>(alloc.label_at(t));
    if (k >= spec.components()) throw std::out_of_range("allocation label out of range");
    total += std::log(spec.weights[k]) +
             log_normal_pdf(series[t], component_location(spec, k, past_of(series, t)),
                            spec.scales[k]);
  }
  if (!std::isfinite(total)) {
    throw std::domain_error("complete_data_log_likelihood: non-finite value");
  }
  return total;
}

std::vector<double> theoretical_acf(const MARSpec& spec, std::size_t h_max) {
  const std::size_t p = spec.max_order();
  std::vector<double> a(p + 1, 0.0);  // a[i] = sum_k pi_k phi_{ki}
  for (std::size_t i = 1; i <= p; ++i) {
    for (std::size_t k = 0; k < spec.components(); ++k) a[i] += spec.weights[k] * spec.ar_coeff(k, i);
  }

  // rho_h - sum_i a_i rho_{|h-i|} = 0 for h = 1..p, with rho_0 = 1 moved to
  // the right-hand side.
  const auto pe = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(pe, pe);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(pe);
  for (std::size_t h = 1; h <= p; ++h) {
    for (std::size_t i = 1; i <= p; ++i) {
      const std::size_t lag = h > i ? h - i : i - h;
      if (lag == 0) {
        rhs(static_cast<Eigen::Index>(h - 1)) += a[i];
      } else {
        m(static_cast<Eigen::Index>(h - 1), static_cast<Eigen::Index>(lag - 1)) -= a[i];
      }
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) throw std::domain_error("theoretical_acf: singular lag system");
  const Eigen::VectorXd head = lu.solve(rhs);

  std::vector<double> rho(h_max + 1, 0.0);
  rho[0] = 1.0;
  for (std::size_t h = 1; h <= h_max; ++h) {
    if (h <= p) {
      rho[h] = head(static_cast<Eigen::Index>(h - 1));
    } else {
      double v = 0.0;
      for (std::size_t i = 1; i <= p; ++i) v += a[i] * rho[h - i];
      rho[h] = v;
    }
  }
  return rho;
}

TimeSeries simulate_path(const MARSpec& spec, std::size_t n, Rng& rng, std::size_t burn) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("simulate_path: n must be >= 1");
  const auto report = is_stable(spec);
  if (!report.stable) {
    std::ostringstream msg;
    msg << "simulate_path: spec is not stable (spectral radius " << report.spectral_radius << ")";
    throw std::invalid_argument(msg.str());
  }
  const std::size_t p = spec.max_order();
  std::vector<double> y(p + burn + n, 0.0);
  for (std::size_t t = p; t < y.size(); ++t) {
    const std::size_t k = draw_categorical(rng, spec.weights);
    const double nu = component_location(spec, k, std::span<const double>(y.data(), t));
    y[t] = nu + spec.scales[k] * draw_normal(rng, 0.0, 1.0);
  }
  return TimeSeries(std::vector<double>(y.end() - static_cast<std::ptrdiff_t>(n), y.end()));
}

TimeSeries simulate_path(const MARSpec& spec, std::size_t n, std::uint64_t seed,
                         std::size_t burn) {
  Rng rng(seed);
  return simulate_path(spec, n, rng, burn);
}

}  // namespace marbayes
