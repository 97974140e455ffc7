#pragma once

#include <cstdint>
#include <vector>

#include "marbayes/sampler.hpp"
#include "marbayes/summary.hpp"

namespace marbayes {

enum class ForecastMode { exact, monte_carlo };

inline constexpr double kPathPruneWeight = 1e-12;
inline constexpr std::size_t kMaxExactPaths = 1000000;

struct GaussianTerm {
  double weight = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

// The h-step predictive of y_{origin+h} given y_0..y_origin as a Gaussian
// mixture, one term per surviving component path. Paths whose weight drops
// below kPathPruneWeight are dropped and the rest renormalised. Throws
// std::length_error (advising Monte Carlo) past kMaxExactPaths paths.
std::vector<GaussianTerm> predictive_mixture(const MARSpec& spec, const TimeSeries& series,
                                             std::size_t origin, std::size_t h);

double mixture_density(const std::vector<GaussianTerm>& terms, double x);

struct PredictiveMoments {
  double mean = 0.0;
  double variance = 0.0;
};
PredictiveMoments mixture_moments(const std::vector<GaussianTerm>& terms);

struct FixedForecastOptions {
  ForecastMode mode = ForecastMode::exact;
  std::size_t mc_paths = 10000;
  std::uint64_t seed = 0;
};

// Predictive density of y_{origin+h} on `grid`. Requires a stable spec and
// origin + 1 >= max order. h = 1 is the one-step conditional density in
// either mode.
DensityGrid predictive_density_fixed(const MARSpec& spec, const TimeSeries& series,
                                     std::size_t origin, std::size_t h,
                                     const std::vector<double>& grid,
                                     const FixedForecastOptions& options = {});

struct ForecastRequest {
  std::size_t horizon = 1;
  std::size_t origin = 0;
  // Empty: kGridPoints points over the widest mean +- 6 sd among the used
  // draws.
  std::vector<double> grid;
  ForecastMode mode = ForecastMode::exact;
  std::size_t mc_paths = 10000;
  // Every thin-th draw is used; 1 averages the full chain.
  std::size_t thin = 10;
  bool keep_draws = false;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct ForecastResult {
  DensityGrid mean_density;
  DensityGrid lower_90;
  DensityGrid upper_90;
  std::size_t draws_used = 0;
  std::vector<std::vector<double>> per_draw;  // filled when keep_draws
};

// Pointwise average over the thinned draws; bands are the pointwise 5% and
// 95% quantiles of the per-draw ordinates, widened where needed so that
// lower <= mean <= upper.
ForecastResult posterior_averaged_forecast(const ChainOutput& output, const TimeSeries& series,
                                           const ForecastRequest& request);

// Evenly spaced points over [lo, hi].
std::vector<double> default_forecast_grid(double lo, double hi, std::size_t points = kGridPoints);

}  // namespace marbayes
