#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "marbayes/relabel.hpp"
#include "marbayes/rjmcmc.hpp"
#include "marbayes/sampler.hpp"

namespace marbayes {

struct EvidenceConfig {
  // Reduced-run lengths for the Metropolis (N_j) and Gibbs (N_i) ordinates.
  std::size_t n_j = 10000;
  std::size_t n_i = 10000;
  // Sweeps discarded at the start of each reduced run.
  std::size_t reduced_burn = 500;
  RelabelConfig relabel;
  OrderMoveConfig orders;
  // Number of candidate g values, for log p(g) = -log(count).
  std::size_t g_candidates = 1;
};

// Log posterior ordinate estimate with its Monte Carlo standard error on the
// log scale (delta method).
struct Ordinate {
  double log_value = 0.0;
  double std_error = 0.0;
};

struct EvidenceParts {
  double log_likelihood = 0.0;
  double log_prior = 0.0;
  double log_phi_ordinate = 0.0;
  double log_mu_ordinate = 0.0;
  double log_tau_ordinate = 0.0;
  double log_pi_ordinate = 0.0;
  double log_order_prior = 0.0;
  double log_order_posterior = 0.0;
  double log_g_prior = 0.0;
};

struct EvidenceResult {
  std::size_t g = 0;
  std::vector<std::size_t> orders;
  // log f(y | g); excludes log p(g).
  double log_marginal = 0.0;
  EvidenceParts parts;
  std::vector<double> ordinate_std_errors;  // phi, mu, tau, pi
  ChainState theta_star;
  double preference = 1.0;
  std::vector<std::string> warnings;

  // Recomputes log_marginal from parts.
  double recompose() const;
};

// Log prior density of (pi, mu, tau) with lambda integrated out; the flat
// prior on AR coefficients over the stability region contributes 0. The mu
// term is dropped under fixed_shift.
double log_prior_density(const ChainState& state, const Hyperparams& hyper);

// Joint tau prior b^a Gamma(a+gc) / (Gamma(a) Gamma(c)^g) prod tau^(c-1) / (b + sum tau)^(a+gc).
double log_precision_prior(std::span<const double> tau, const Hyperparams& hyper);

double log_posterior_kernel(const ChainState& state, const TimeSeries& series,
                            const Hyperparams& hyper);

// Retained draw with the largest log-likelihood + log-prior; ties keep the
// earliest draw. Throws std::invalid_argument on an empty chain.
ChainState select_theta_star(const ChainOutput& output, const TimeSeries& series,
                             const Hyperparams& hyper);

// Chib-Jeliazkov estimate of log p(phi* | y), multiplied over components in
// order with earlier components pinned. hyper.gamma must hold the tuned
// proposal precisions of the main run.
Ordinate estimate_phi_ordinate(const TimeSeries& series, const ChainState& star,
                               const Hyperparams& hyper, std::size_t n_j, std::size_t n_i,
                               std::size_t burn, std::uint64_t seed);
// Rao-Blackwellised ordinates. Each pins every block earlier in the order
// phi, mu, tau, pi at its starred value.
Ordinate estimate_mu_ordinate(const TimeSeries& series, const ChainState& star,
                              const Hyperparams& hyper, std::size_t n_i, std::size_t burn,
                              std::uint64_t seed);
Ordinate estimate_tau_ordinate(const TimeSeries& series, const ChainState& star,
                               const Hyperparams& hyper, std::size_t n_i, std::size_t burn,
                               std::uint64_t seed);
Ordinate estimate_pi_ordinate(const TimeSeries& series, const ChainState& star,
                              const Hyperparams& hyper, std::size_t n_i, std::size_t burn,
                              std::uint64_t seed);

// Evidence at fixed orders: full chain, relabel, theta*, four ordinates.
// The order terms are supplied by the caller (0 when orders are not
// selected).
EvidenceResult fixed_order_evidence(const TimeSeries& series, std::size_t g,
                                    const std::vector<std::size_t>& orders,
                                    const Hyperparams& hyper, const EvidenceConfig& config,
                                    std::uint64_t seed, double log_order_prior = 0.0,
                                    double log_order_posterior = 0.0);

// Order selection by reversible jump, then fixed_order_evidence at the modal
// orders with p(p* | g) uniform over p_max^g labelled configurations.
EvidenceResult marginal_log_likelihood(const TimeSeries& series, std::size_t g,
                                       const Hyperparams& hyper, const EvidenceConfig& config,
                                       std::uint64_t seed);

struct SelectionResult {
  std::size_t best_g = 0;
  std::vector<EvidenceResult> table;
};

// Evaluates every candidate g (concurrently on `workers` threads, each with
// its own derived seed) and returns the argmax of the log marginal.
SelectionResult select_g(const TimeSeries& series, const std::vector<std::size_t>& g_range,
                         const Hyperparams& hyper, const EvidenceConfig& config,
                         std::uint64_t seed, std::size_t workers = 1);

}  // namespace marbayes
