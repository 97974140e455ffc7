#include "marbayes/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "marbayes/parallel.hpp"
#include "marbayes/stability.hpp"

namespace marbayes {

namespace {

void check_origin(const MARSpec& spec, const TimeSeries& series, std::size_t origin, std::size_t h) {
  if (h < 1) throw std::invalid_argument("forecast: horizon must be >= 1");
  if (origin >= series.size()) throw std::out_of_range("forecast: origin past the end of the series");
  if (origin + 1 < spec.max_order())
    throw std::out_of_range("forecast: origin leaves fewer than p observations");
}

// Future value y_{origin+j} as mean + sum_i coef[i] * eps_i.
struct Future {
  double mean = 0.0;
  std::vector<double> coef;
};

struct Enumerator {
  const MARSpec& spec;
  std::vector<double> last;  // last p observed values, last.back() = y_origin
  std::size_t h;
  std::size_t p;
  std::vector<Future> path;
  std::vector<GaussianTerm> out;

  // Value at lag i (1-based) before future step j (0-based).
  void add_lag(std::size_t j, std::size_t i, double phi, Future& f) const {
    if (i > j) {
      f.mean += phi * last[last.size() - (i - j)];
    } else {
      const Future& src = path[j - i];
      f.mean += phi * src.mean;
      for (std::size_t e = 0; e < h; ++e) f.coef[e] += phi * src.coef[e];
    }
  }

  void step(std::size_t j, double weight) {
    for (std::size_t k = 0; k < spec.components(); ++k) {
      const double w = weight * spec.weights[k];
      if (w < kPathPruneWeight) continue;
      Future f{spec.shifts[k], std::vector<double>(h, 0.0)};
      for (std::size_t i = 1; i <= spec.order(k); ++i) add_lag(j, i, spec.ar[k][i - 1], f);
      f.coef[j] = spec.scales[k];
      if (j + 1 == h) {
        double var = 0.0;
        for (double c : f.coef) var += c * c;
        out.push_back({w, f.mean, var});
        if (out.size() > kMaxExactPaths)
          throw std::length_error("predictive_mixture: more than " + std::to_string(kMaxExactPaths) +
                                  " component paths; use Monte Carlo mode");
      } else {
        path.push_back(std::move(f));
        step(j + 1, w);
        path.pop_back();
      }
    }
  }
};

std::vector<double> last_values(const TimeSeries& series, std::size_t origin, std::size_t p) {
  return std::vector<double>(series.values.begin() + static_cast<std::ptrdiff_t>(origin + 1 - p),
                             series.values.begin() + static_cast<std::ptrdiff_t>(origin + 1));
}

// Simulates y_{origin+1..origin+h-1} and returns the final p-window.
std::vector<double> simulate_window(const MARSpec& spec, std::vector<double> window,
                                    std::size_t steps, Rng& rng) {
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t k = draw_categorical(rng, spec.weights);
    const double y = component_location(spec, k, window) + draw_normal(rng, 0.0, spec.scales[k]);
    if (!window.empty()) {
      std::rotate(window.begin(), window.begin() + 1, window.end());
      window.back() = y;
    }
  }
  return window;
}

double quantile_of(std::vector<double>& v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

// Mean and variance used to size the default grid.
PredictiveMoments rough_moments(const MARSpec& spec, const TimeSeries& series, std::size_t origin,
                                std::size_t h, std::uint64_t seed) {
  if (std::pow(static_cast<double>(spec.components()), static_cast<double>(h - 1)) <= 1e4)
    return mixture_moments(predictive_mixture(spec, series, origin, h));
  Rng rng(seed);
  const auto start = last_values(series, origin, spec.max_order());
  double s = 0.0, ss = 0.0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    auto w = simulate_window(spec, start, h, rng);
    // window is empty only for p = 0, which MARSpec forbids
    s += w.back();
    ss += w.back() * w.back();
  }
  const double m = s / n;
  return {m, std::max(ss / n - m * m, 0.0)};
}

}  // namespace

std::vector<GaussianTerm> predictive_mixture(const MARSpec& spec, const TimeSeries& series,
                                             std::size_t origin, std::size_t h) {
  check_origin(spec, series, origin, h);
  const std::size_t p = spec.max_order();
  Enumerator e{spec, last_values(series, origin, p), h, p, {}, {}};
  e.step(0, 1.0);
  double total = 0.0;
  for (const auto& t : e.out) total += t.weight;
  for (auto& t : e.out) t.weight /= total;
  return e.out;
}

double mixture_density(const std::vector<GaussianTerm>& terms, double x) {
  double d = 0.0;
  for (const auto& t : terms) d += t.weight * std::exp(log_normal_pdf(x, t.mean, std::sqrt(t.variance)));
  return d;
}

PredictiveMoments mixture_moments(const std::vector<GaussianTerm>& terms) {
  double m = 0.0, second = 0.0;
  for (const auto& t : terms) {
    m += t.weight * t.mean;
    second += t.weight * (t.variance + t.mean * t.mean);
  }
  return {m, second - m * m};
}

DensityGrid predictive_density_fixed(const MARSpec& spec, const TimeSeries& series,
                                     std::size_t origin, std::size_t h,
                                     const std::vector<double>& grid,
                                     const FixedForecastOptions& options) {
  check_origin(spec, series, origin, h);
  if (const auto st = is_stable(spec); !st.stable)
    throw std::invalid_argument("forecast: spec is not stable (spectral radius " +
                                std::to_string(st.spectral_radius) + ")");
  DensityGrid out;
  out.abscissae = grid;
  out.ordinates.assign(grid.size(), 0.0);
  const std::size_t p = spec.max_order();

  if (h == 1) {
    const auto past = last_values(series, origin, p);
    for (std::size_t i = 0; i < grid.size(); ++i)
      out.ordinates[i] = std::exp(log_conditional_pdf_at(spec, past, grid[i]));
    return out;
  }

  if (options.mode == ForecastMode::exact) {
    const auto terms = predictive_mixture(spec, series, origin, h);
    for (std::size_t i = 0; i < grid.size(); ++i) out.ordinates[i] = mixture_density(terms, grid[i]);
    return out;
  }

  if (options.mc_paths == 0) throw std::invalid_argument("forecast: mc_paths must be positive");
  Rng rng(options.seed);
  const auto start = last_values(series, origin, p);
  const std::size_t g = spec.components();
  std::vector<double> nu(g);
  for (std::size_t path = 0; path < options.mc_paths; ++path) {
    const auto w = simulate_window(spec, start, h - 1, rng);
    for (std::size_t k = 0; k < g; ++k) nu[k] = component_location(spec, k, w);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double d = 0.0;
      for (std::size_t k = 0; k < g; ++k)
        d += spec.weights[k] * std::exp(log_normal_pdf(grid[i], nu[k], spec.scales[k]));
      out.ordinates[i] += d;
    }
  }
  for (double& v : out.ordinates) v /= static_cast<double>(options.mc_paths);
  return out;
}

std::vector<double> default_forecast_grid(double lo, double hi, std::size_t points) {
  if (!(hi > lo) || points < 2) throw std::invalid_argument("default_forecast_grid: bad range");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

ForecastResult posterior_averaged_forecast(const ChainOutput& output, const TimeSeries& series,
                                           const ForecastRequest& request) {
  if (output.draws.empty()) throw std::invalid_argument("forecast: empty chain");
  if (request.thin == 0) throw std::invalid_argument("forecast: thin must be >= 1");
  std::vector<const ChainState*> used;
  for (std::size_t i = 0; i < output.draws.size(); i += request.thin) used.push_back(&output.draws[i]);
  const std::size_t n = used.size();

  std::vector<double> grid = request.grid;
  if (grid.empty()) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
      const auto m = rough_moments(used[i]->spec, series, request.origin, request.horizon,
                                   derive_seed(request.seed, 2 * i + 1));
      const double sd = std::sqrt(m.variance);
      lo = std::min(lo, m.mean - 6 * sd);
      hi = std::max(hi, m.mean + 6 * sd);
    }
    grid = default_forecast_grid(lo, hi);
  }

  std::vector<std::vector<double>> dens(n);
  parallel_for(n, std::max<std::size_t>(1, request.workers), [&](std::size_t i) {
    FixedForecastOptions opt{request.mode, request.mc_paths, derive_seed(request.seed, 2 * i)};
    dens[i] = predictive_density_fixed(used[i]->spec, series, request.origin, request.horizon, grid,
                                       opt)
                  .ordinates;
  });

  ForecastResult r;
  r.draws_used = n;
  r.mean_density.abscissae = r.lower_90.abscissae = r.upper_90.abscissae = grid;
  const std::size_t m = grid.size();
  r.mean_density.ordinates.assign(m, 0.0);
  r.lower_90.ordinates.assign(m, 0.0);
  r.upper_90.ordinates.assign(m, 0.0);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (column[i] = dens[i][j]);
    const double mean = s / static_cast<double>(n);
    r.mean_density.ordinates[j] = mean;
    r.lower_90.ordinates[j] = std::min(quantile_of(column, 0.05), mean);
    r.upper_90.ordinates[j] = std::max(quantile_of(column, 0.95), mean);
  }
  if (request.keep_draws) r.per_draw = std::move(dens);
  return r;
}

}  // namespace marbayes
