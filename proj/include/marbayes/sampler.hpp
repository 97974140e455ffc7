#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "marbayes/model.hpp"
#include "marbayes/random.hpp"

namespace marbayes {

/// Prior constants and sampler tuning.
///
/// Priors: pi ~ Dirichlet(w), mu_k ~ N(zeta, 1/kappa), tau_k ~ Ga(c, lambda),
/// lambda ~ Ga(a, b), and a flat prior on each component's AR coefficients
/// restricted to the stability region of the whole model.
struct Hyperparams {
  double a = 0.2;
  double c = 2.0;
  double zeta = 0.0;
  double kappa = 1.0;
  double b = 1.0;
  // Empty means all ones.
  std::vector<double> dirichlet_weights;
  // Per-component RWM precision gamma_k; proposals are N(phi_k, I / gamma_k).
  // Empty means kDefaultGamma for every component.
  std::vector<double> gamma;
  bool fixed_shift = false;
  std::size_t p_max = 5;
  // n_iter counts every sweep of the main chain, burn-in included.
  std::size_t burn_in = 10000;
  std::size_t n_iter = 20000;
  bool tune = true;
  std::size_t pilot_iters = 2000;
  bool keep_allocations = false;

  static constexpr double kDefaultGamma = 100.0;
  static constexpr double kTargetAcceptance = 0.225;

  void validate(std::size_t g) const;
  std::vector<double> dirichlet_for(std::size_t g) const;
  std::vector<double> gamma_for(std::size_t g) const;
};

// zeta = min + R/2, kappa = 1/R, b = 10/R^2 with R the data range.
Hyperparams default_hyperparams(const TimeSeries& series);

/// One MCMC state. `means` holds the mu_k coordinates the Gibbs block samples;
/// `spec.shifts` always equals mu_k * (1 - sum phi_k) (or zero under
/// fixed_shift).
struct ChainState {
  MARSpec spec;
  std::vector<double> means;
  LatentAllocation alloc;
  double lambda = 1.0;
  std::size_t iteration = 0;
};

struct ChainOutput {
  std::vector<ChainState> draws;
  std::vector<double> acceptance;
  std::size_t stability_rejections = 0;
  std::uint64_t seed = 0;
  std::vector<double> gamma;
  std::vector<double> pilot_acceptance;
  std::vector<std::string> warnings;
};

// Blocks held fixed during a sweep; used by the reduced runs of the evidence
// estimator. Empty pin_ar means nothing pinned.
struct SweepPins {
  std::vector<bool> ar;
  bool means = false;
  bool precisions = false;
  bool weights = false;

  bool ar_pinned(std::size_t k) const { return k < ar.size() && ar[k]; }
};

// Posterior allocation probabilities for y_t, normalised over components.
std::vector<double> allocation_probabilities(const MARSpec& spec, const TimeSeries& series,
                                             std::size_t t);
LatentAllocation sample_allocations(const ChainState& state, const TimeSeries& series, Rng& rng);

std::vector<double> sample_weights(const LatentAllocation& alloc,
                                   std::span<const double> dirichlet_weights, Rng& rng);
std::vector<double> sample_weights(const LatentAllocation& alloc, Rng& rng);

struct NormalParams {
  double mean = 0.0;
  double variance = 0.0;
};
struct GammaParams {
  double shape = 0.0;
  double rate = 0.0;
};

// Full conditional of mu_k given phi, tau and the allocation; residuals
// exclude the shift.
NormalParams mean_full_conditional(const ChainState& state, const TimeSeries& series,
                                   const Hyperparams& hyper, std::size_t k);
// Draws every mu_k and returns the updated means; the matching shifts are
// mu_k * b_k.
std::vector<double> sample_means(const ChainState& state, const TimeSeries& series,
                                 const Hyperparams& hyper, Rng& rng);

GammaParams lambda_full_conditional(const ChainState& state, const Hyperparams& hyper);
double sample_lambda(const ChainState& state, const Hyperparams& hyper, Rng& rng);

GammaParams precision_full_conditional(const ChainState& state, const TimeSeries& series,
                                       const Hyperparams& hyper, std::size_t k);
// Draws every tau_k and returns the matching scales 1/sqrt(tau_k).
std::vector<double> sample_precisions(const ChainState& state, const TimeSeries& series,
                                      const Hyperparams& hyper, Rng& rng);

// Log of the component-k likelihood ratio over points allocated to k, for
// replacing (ar[k], shifts[k]) by the proposed pair. Points with t below
// `from` are excluded.
double component_log_likelihood_ratio(const MARSpec& spec, const TimeSeries& series,
                                      const LatentAllocation& alloc, std::size_t k,
                                      std::span<const double> proposed_ar, double proposed_shift,
                                      std::size_t from = 0);

struct RwmResult {
  bool accepted = false;
  double acceptance_probability = 0.0;
  std::vector<double> coefficients;
  double shift = 0.0;
};

// Shift that accompanies a set of AR coefficients for component k, holding
// the sampled mean fixed.
double shift_for(const ChainState& state, const Hyperparams& hyper, std::size_t k,
                 std::span<const double> coefficients);

RwmResult rwm_update_ar(const ChainState& state, const TimeSeries& series,
                        const Hyperparams& hyper, std::size_t k, Rng& rng);

struct SweepResult {
  ChainState state;
  std::vector<double> ar_acceptance;
  std::vector<char> ar_accepted;
  bool stability_rejected = false;
};

// One pass of allocations, weights, means, lambda, precisions and the RWM
// move for every component, without the stability check.
SweepResult candidate_sweep(const ChainState& state, const TimeSeries& series,
                            const Hyperparams& hyper, Rng& rng, const SweepPins& pins = {});

// Keeps `candidate` if its spec is stable, otherwise returns `previous`
// unchanged and flags the rejection.
SweepResult stability_gate(const ChainState& previous, SweepResult candidate);

SweepResult gibbs_sweep(const ChainState& state, const TimeSeries& series,
                        const Hyperparams& hyper, Rng& rng, const SweepPins& pins = {});

// Deterministic, stable starting state: quantile-binned allocations, common
// mean and precision, ridge least-squares AR coefficients shrunk until stable.
ChainState initial_state(const TimeSeries& series, std::size_t g,
                         const std::vector<std::size_t>& orders, const Hyperparams& hyper);

struct TuningResult {
  std::vector<double> gamma;
  std::vector<double> acceptance;
  std::vector<std::string> warnings;
  ChainState state;
};

// Pilot-phase stochastic approximation of log gamma_k toward the target
// acceptance rate. The returned gamma is meant to be frozen afterwards.
TuningResult tune_gamma(const ChainState& start, const TimeSeries& series,
                        const Hyperparams& hyper, std::size_t pilot_iters, Rng& rng);

ChainOutput run_chain(const TimeSeries& series, std::size_t g,
                      const std::vector<std::size_t>& orders, const Hyperparams& hyper,
                      std::uint64_t seed);

}  // namespace marbayes
