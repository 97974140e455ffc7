#include "marbayes/summary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace marbayes {

namespace {

// Type-7 quantile of sorted data.
double quantile_sorted(const std::vector<double>& x, double q) {
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= x.size()) return x.back();
  const double f = pos - static_cast<double>(i);
  return x[i] + f * (x[i + 1] - x[i]);
}

double sample_sd(std::span<const double> x, double mean) {
  if (x.size() < 2) return 0.0;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double bandwidth_sorted(const std::vector<double>& sorted) {
  const double sd = sample_sd(sorted, mean_of(sorted));
  const double iqr = (quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25)) / 1.34;
  double spread = std::min(sd, iqr);
  if (spread <= 0.0) spread = std::max(sd, iqr);
  return 0.9 * spread * std::pow(static_cast<double>(sorted.size()), -0.2);
}

DensityGrid kde_sorted(const std::vector<double>& sorted, double h, double l, double u,
                       std::size_t points) {
  DensityGrid grid;
  grid.abscissae.resize(points);
  grid.ordinates.assign(points, 0.0);
  const double step = points > 1 ? (u - l) / static_cast<double>(points - 1) : 0.0;
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2 * std::numbers::pi));
  // Kernel contributions past 9 bandwidths are below 1e-17 of the peak.
  const double reach = 9.0 * h;
  for (std::size_t i = 0; i < points; ++i) {
    const double x = l + step * static_cast<double>(i);
    grid.abscissae[i] = x;
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - reach);
    auto hi = std::upper_bound(lo, sorted.end(), x + reach);
    double acc = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const double z = (x - *it) / h;
      acc += std::exp(-0.5 * z * z);
    }
    grid.ordinates[i] = acc * norm;
  }
  return grid;
}

}  // namespace

double DensityGrid::integral() const {
  double s = 0.0;
  for (std::size_t i = 1; i < abscissae.size(); ++i)
    s += 0.5 * (ordinates[i] + ordinates[i - 1]) * (abscissae[i] - abscissae[i - 1]);
  return s;
}

double silverman_bandwidth(std::span<const double> draws) {
  if (draws.empty()) throw std::invalid_argument("silverman_bandwidth: no draws");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  return bandwidth_sorted(sorted);
}

std::pair<double, double> hpd_interval(std::span<const double> draws, double mass) {
  if (draws.empty()) throw std::invalid_argument("hpd_interval: no draws");
  if (!(mass > 0.0 && mass <= 1.0)) throw std::invalid_argument("hpd_interval: mass must be in (0, 1]");
  std::vector<double> x(draws.begin(), draws.end());
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9)));
  std::size_t best = 0;
  double width = x[m - 1] - x[0];
  for (std::size_t i = 1; i + m <= n; ++i) {
    const double w = x[i + m - 1] - x[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {x[best], x[best + m - 1]};
}

DensityGrid density_grid(std::span<const double> draws, double l, double u, std::size_t points) {
  if (!(u > l)) throw std::invalid_argument("density_grid: need u > l");
  if (draws.empty()) throw std::invalid_argument("density_grid: no draws");
  if (points < 2) throw std::invalid_argument("density_grid: need at least 2 grid points");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = bandwidth_sorted(sorted);
  if (h <= 0.0) {
    // Constant sample: all mass at one point, put it on the nearest node.
    DensityGrid grid;
    const double step = (u - l) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) grid.abscissae.push_back(l + step * static_cast<double>(i));
    grid.ordinates.assign(points, 0.0);
    const double pos = (sorted.front() - l) / step;
    if (pos >= -0.5 && pos <= static_cast<double>(points) - 0.5) {
      const auto i = static_cast<std::size_t>(std::lround(pos));
      grid.ordinates[i] = (i == 0 || i + 1 == points) ? 2.0 / step : 1.0 / step;
    }
    return grid;
  }
  return kde_sorted(sorted, h, l, u, points);
}

ParameterSummary summarize(std::span<const double> draws, std::string name) {
  if (draws.size() < 100)
    throw std::invalid_argument("summarize: need at least 100 draws, got " + std::to_string(draws.size()));
  ParameterSummary s;
  s.name = std::move(name);
  s.posterior_mean = mean_of(draws);
  s.standard_error = sample_sd(draws, s.posterior_mean);
  s.hpdr_90 = hpd_interval(draws, 0.9);

  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = bandwidth_sorted(sorted);
  if (h <= 0.0) {
    s.hd_value = sorted.front();
    return s;
  }
  const auto grid = kde_sorted(sorted, h, sorted.front() - 3 * h, sorted.back() + 3 * h, kGridPoints);
  const auto it = std::max_element(grid.ordinates.begin(), grid.ordinates.end());
  s.hd_value = grid.abscissae[static_cast<std::size_t>(it - grid.ordinates.begin())];
  return s;
}

DensityGrid average_density(std::span<const DensityGrid> grids) {
  if (grids.empty()) throw std::invalid_argument("average_density: no grids");
  DensityGrid out;
  out.abscissae = grids.front().abscissae;
  out.ordinates.assign(out.abscissae.size(), 0.0);
  for (const auto& g : grids) {
    if (g.abscissae != out.abscissae || g.ordinates.size() != out.abscissae.size())
      throw std::invalid_argument("average_density: grids do not share abscissae");
    for (std::size_t i = 0; i < out.ordinates.size(); ++i) out.ordinates[i] += g.ordinates[i];
  }
  for (double& v : out.ordinates) v /= static_cast<double>(grids.size());
  return out;
}

std::vector<ParameterTrace> parameter_traces(const ChainOutput& output, bool fixed_shift) {
  std::vector<ParameterTrace> traces;
  if (output.draws.empty()) return traces;
  const auto orders = output.draws.front().spec.orders();
  const std::size_t g = orders.size();
  auto idx = [](std::size_t i) { return std::to_string(i + 1); };
  for (std::size_t k = 0; k < g; ++k) traces.push_back({"pi_" + idx(k), {}});
  if (!fixed_shift) {
    for (std::size_t k = 0; k < g; ++k) traces.push_back({"mu_" + idx(k), {}});
    for (std::size_t k = 0; k < g; ++k) traces.push_back({"shift_" + idx(k), {}});
  }
  for (std::size_t k = 0; k < g; ++k)
    for (std::size_t j = 0; j < orders[k]; ++j) traces.push_back({"phi_" + idx(k) + "_" + idx(j), {}});
  for (std::size_t k = 0; k < g; ++k) traces.push_back({"sigma_" + idx(k), {}});
  for (auto& t : traces) t.values.reserve(output.draws.size());

  for (const auto& d : output.draws) {
    if (d.spec.orders() != orders) throw std::invalid_argument("parameter_traces: orders vary across draws");
    std::size_t c = 0;
    for (std::size_t k = 0; k < g; ++k) traces[c++].values.push_back(d.spec.weights[k]);
    if (!fixed_shift) {
      for (std::size_t k = 0; k < g; ++k) traces[c++].values.push_back(d.means.at(k));
      for (std::size_t k = 0; k < g; ++k) traces[c++].values.push_back(d.spec.shifts[k]);
    }
    for (std::size_t k = 0; k < g; ++k)
      for (double v : d.spec.ar[k]) traces[c++].values.push_back(v);
    for (std::size_t k = 0; k < g; ++k) traces[c++].values.push_back(d.spec.scales[k]);
  }
  return traces;
}

}  // namespace marbayes
