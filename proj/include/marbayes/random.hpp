#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace marbayes {

// Every sampler takes its generator explicitly; nothing in the library owns
// global random state.
using Rng = std::mt19937_64;

// Stream splitting for parallel work: worker `stream` of a run seeded with
// `master` uses splitmix64(master + (stream + 1) * 0x9E3779B97F4A7C15).
// Stream 0 of the master seed is not the master seed itself.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

double draw_normal(Rng& rng, double mean, double sd);
double draw_uniform(Rng& rng, double lo, double hi);
// Gamma with shape/rate parameterisation (mean = shape / rate).
double draw_gamma(Rng& rng, double shape, double rate);
std::vector<double> draw_dirichlet(Rng& rng, std::span<const double> alpha);
// Draws an index with probability proportional to `probs` (need not be
// normalised, must be nonnegative with positive sum).
std::size_t draw_categorical(Rng& rng, std::span<const double> probs);

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_cdf(double x);
double log_normal_pdf(double x, double mean, double sd);
double log_gamma_pdf(double x, double shape, double rate);
double log_dirichlet_pdf(std::span<const double> x, std::span<const double> alpha);
double log_sum_exp(std::span<const double> values);

}  // namespace marbayes
