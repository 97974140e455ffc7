#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "marbayes/model.hpp"

namespace fixtures {

// 0.5 N(-0.5 y_{t-1}, 1) + 0.5 N(y_{t-1}, 4)
inline marbayes::MARSpec model_a() {
  return marbayes::MARSpec::make({0.5, 0.5}, {0.0, 0.0}, {{-0.5}, {1.0}}, {1.0, 2.0});
}

inline marbayes::MARSpec model_b() {
  return marbayes::MARSpec::make({0.5, 0.3, 0.2}, {0.0, 0.0, 0.0}, {{-0.5, 0.5}, {-0.4}, {1.0}},
                                 {1.0, 2.0, 4.0});
}

inline marbayes::MARSpec single_ar(std::vector<double> coeffs, double shift = 0.0,
                                   double scale = 1.0) {
  return marbayes::MARSpec::make({1.0}, {shift}, {std::move(coeffs)}, {scale});
}

// Written out longhand so it shares no code with the library.
inline double normal_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

// Random stable-looking spec; callers filter with is_stable where needed.
inline marbayes::MARSpec random_spec(std::mt19937_64& rng, std::size_t g, std::size_t p_max,
                                     double coeff_scale = 0.6) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> order(1, p_max);
  std::vector<double> w(g);
  double total = 0.0;
  for (auto& x : w) {
    x = 0.2 + unit(rng);
    total += x;
  }
  for (auto& x : w) x /= total;
  w.back() = 1.0;
  for (std::size_t k = 0; k + 1 < g; ++k) w.back() -= w[k];
  std::vector<double> shifts(g), scales(g);
  std::vector<std::vector<double>> ar(g);
  for (std::size_t k = 0; k < g; ++k) {
    shifts[k] = 2.0 * unit(rng) - 1.0;
    scales[k] = 0.3 + 2.0 * unit(rng);
    ar[k].resize(order(rng));
    for (auto& c : ar[k]) c = coeff_scale * (2.0 * unit(rng) - 1.0);
  }
  return marbayes::MARSpec::make(w, shifts, ar, scales);
}

}  // namespace fixtures
