#include "marbayes/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "marbayes/parallel.hpp"
#include "marbayes/stability.hpp"

namespace marbayes {

namespace {

// Running sums for a mean of positive terms held in log space.
class LogMean {
 public:
  void add(double log_term) { terms_.push_back(log_term); }

  Ordinate finish(const char* what) const {
    if (terms_.empty()) throw std::invalid_argument(std::string(what) + ": no reduced-run draws");
    const double lse = log_sum_exp(terms_);
    const double n = static_cast<double>(terms_.size());
    if (!std::isfinite(lse)) {
      throw std::runtime_error(std::string(what) +
                               ": every term is zero; increase the reduced-run length");
    }
    // Relative variance of the mean, for the delta-method standard error.
    double rel = 0.0;
    const double log_mean = lse - std::log(n);
    for (double t : terms_) {
      const double r = std::exp(t - log_mean) - 1.0;
      rel += r * r;
    }
    rel /= n * n;
    return {log_mean, std::sqrt(rel)};
  }

 private:
  std::vector<double> terms_;
};

template <class Visit>
void reduced_run(const ChainState& star, const TimeSeries& series, const Hyperparams& hyper,
                 const SweepPins& pins, std::size_t n, std::size_t burn, Rng& rng, Visit&& visit) {
  ChainState state = star;
  state.alloc = sample_allocations(state, series, rng);
  for (std::size_t it = 0; it < burn + n; ++it) {
    state = gibbs_sweep(state, series, hyper, rng, pins).state;
    if (it >= burn) visit(state);
  }
}

double log_mvn_isotropic(std::span<const double> x, std::span<const double> mean, double gamma) {
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += (x[i] - mean[i]) * (x[i] - mean[i]);
  const double d = static_cast<double>(x.size());
  return 0.5 * d * std::log(gamma / (2.0 * std::numbers::pi)) - 0.5 * gamma * ss;
}

// log alpha for moving component k of `state` to `to`, with the stability
// indicator of the target.
double log_rwm_alpha(const ChainState& state, const TimeSeries& series, const Hyperparams& hyper,
                     std::size_t k, const std::vector<double>& to) {
  const double shift = shift_for(state, hyper, k, to);
  MARSpec target = state.spec;
  target.ar[k] = to;
  target.shifts[k] = shift;
  if (!is_stable(target).stable) return -std::numeric_limits<double>::infinity();
  const double lr = component_log_likelihood_ratio(state.spec, series, state.alloc, k, to, shift);
  return std::min(0.0, lr);
}

ChainState with_star_ar(const ChainState& state, const ChainState& star, const Hyperparams& hyper,
                        std::size_t upto) {
  ChainState out = state;
  for (std::size_t k = 0; k < upto; ++k) {
    out.spec.ar[k] = star.spec.ar[k];
    out.spec.shifts[k] = shift_for(out, hyper, k, out.spec.ar[k]);
  }
  return out;
}

}  // namespace

double EvidenceResult::recompose() const {
  return parts.log_likelihood + parts.log_prior + parts.log_order_prior -
         (parts.log_phi_ordinate + parts.log_mu_ordinate + parts.log_tau_ordinate +
          parts.log_pi_ordinate + parts.log_order_posterior);
}

double log_precision_prior(std::span<const double> tau, const Hyperparams& hyper) {
  const double g = static_cast<double>(tau.size());
  const double shape = hyper.a + g * hyper.c;
  double sum = 0.0, log_prod = 0.0;
  for (double t : tau) {
    sum += t;
    log_prod += std::log(t);
  }
  return hyper.a * std::log(hyper.b) + std::lgamma(shape) - std::lgamma(hyper.a) -
         g * std::lgamma(hyper.c) + (hyper.c - 1.0) * log_prod - shape * std::log(hyper.b + sum);
}

double log_prior_density(const ChainState& state, const Hyperparams& hyper) {
  const std::size_t g = state.spec.components();
  const auto dir = hyper.dirichlet_for(g);
  double lp = log_dirichlet_pdf(state.spec.weights, dir);
  if (!hyper.fixed_shift) {
    const double sd = 1.0 / std::sqrt(hyper.kappa);
    for (double mu : state.means) lp += log_normal_pdf(mu, hyper.zeta, sd);
  }
  std::vector<double> tau(g);
  for (std::size_t k = 0; k < g; ++k) tau[k] = state.spec.precision(k);
  return lp + log_precision_prior(tau, hyper);
}

double log_posterior_kernel(const ChainState& state, const TimeSeries& series,
                            const Hyperparams& hyper) {
  return log_likelihood(state.spec, series) + log_prior_density(state, hyper);
}

ChainState select_theta_star(const ChainOutput& output, const TimeSeries& series,
                             const Hyperparams& hyper) {
  if (output.draws.empty()) throw std::invalid_argument("select_theta_star: chain has no draws");
  std::size_t best = 0;
  double best_lp = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < output.draws.size(); ++i) {
    const double lp = log_posterior_kernel(output.draws[i], series, hyper);
    if (lp > best_lp) {
      best_lp = lp;
      best = i;
    }
  }
  ChainState star = output.draws[best];
  star.alloc = LatentAllocation();
  return star;
}

Ordinate estimate_phi_ordinate(const TimeSeries& series, const ChainState& star,
                               const Hyperparams& hyper, std::size_t n_j, std::size_t n_i,
                               std::size_t burn, std::uint64_t seed) {
  const std::size_t g = star.spec.components();
  const auto gamma = hyper.gamma_for(g);
  Ordinate total;
  double var = 0.0;
  for (std::size_t k = 0; k < g; ++k) {
    const auto& phi_star = star.spec.ar[k];
    const double sd = 1.0 / std::sqrt(gamma[k]);

    // Numerator: phi_1..phi_{k-1} pinned, phi_k free.
    SweepPins pins;
    pins.ar.assign(g, false);
    for (std::size_t j = 0; j < k; ++j) pins.ar[j] = true;
    Rng rng1(derive_seed(seed, 2 * k));
    LogMean num;
    const ChainState start1 = with_star_ar(star, star, hyper, g);
    reduced_run(start1, series, hyper, pins, n_j, burn, rng1, [&](const ChainState& s) {
      const auto& phi = s.spec.ar[k];
      num.add(log_rwm_alpha(s, series, hyper, k, phi_star) +
              log_mvn_isotropic(phi_star, phi, gamma[k]));
    });

    // Denominator: phi_k pinned too; fresh proposals from phi_k*.
    pins.ar[k] = true;
    Rng rng2(derive_seed(seed, 2 * k + 1));
    LogMean den;
    reduced_run(start1, series, hyper, pins, n_i, burn, rng2, [&](const ChainState& s) {
      std::vector<double> prop = phi_star;
      for (double& c : prop) c += draw_normal(rng2, 0.0, sd);
      den.add(log_rwm_alpha(s, series, hyper, k, prop));
    });

    std::ostringstream what;
    what << "estimate_phi_ordinate (component " << k + 1 << ")";
    const auto a = num.finish(what.str().c_str());
    const auto b = den.finish(what.str().c_str());
    total.log_value += a.log_value - b.log_value;
    var += a.std_error * a.std_error + b.std_error * b.std_error;
  }
  total.std_error = std::sqrt(var);
  return total;
}

Ordinate estimate_mu_ordinate(const TimeSeries& series, const ChainState& star,
                              const Hyperparams& hyper, std::size_t n_i, std::size_t burn,
                              std::uint64_t seed) {
  if (hyper.fixed_shift) return {};
  const std::size_t g = star.spec.components();
  SweepPins pins;
  pins.ar.assign(g, true);
  Rng rng(seed);
  LogMean acc;
  reduced_run(star, series, hyper, pins, n_i, burn, rng, [&](const ChainState& s) {
    double lp = 0.0;
    for (std::size_t k = 0; k < g; ++k) {
      const auto post = mean_full_conditional(s, series, hyper, k);
      lp += log_normal_pdf(star.means[k], post.mean, std::sqrt(post.variance));
    }
    acc.add(lp);
  });
  return acc.finish("estimate_mu_ordinate");
}

Ordinate estimate_tau_ordinate(const TimeSeries& series, const ChainState& star,
                               const Hyperparams& hyper, std::size_t n_i, std::size_t burn,
                               std::uint64_t seed) {
  const std::size_t g = star.spec.components();
  SweepPins pins;
  pins.ar.assign(g, true);
  pins.means = true;
  Rng rng(seed);
  LogMean acc;
  reduced_run(star, series, hyper, pins, n_i, burn, rng, [&](const ChainState& s) {
    double lp = 0.0;
    for (std::size_t k = 0; k < g; ++k) {
      // The full conditional only reads z, lambda and the pinned phi, mu.
      const auto post = precision_full_conditional(s, series, hyper, k);
      lp += log_gamma_pdf(star.spec.precision(k), post.shape, post.rate);
    }
    acc.add(lp);
  });
  return acc.finish("estimate_tau_ordinate");
}

Ordinate estimate_pi_ordinate(const TimeSeries& series, const ChainState& star,
                              const Hyperparams& hyper, std::size_t n_i, std::size_t burn,
                              std::uint64_t seed) {
  const std::size_t g = star.spec.components();
  if (g == 1) return {};
  SweepPins pins;
  pins.ar.assign(g, true);
  pins.means = true;
  pins.precisions = true;
  const auto dir = hyper.dirichlet_for(g);
  Rng rng(seed);
  LogMean acc;
  std::vector<double> alpha(g);
  reduced_run(star, series, hyper, pins, n_i, burn, rng, [&](const ChainState& s) {
    for (std::size_t k = 0; k < g; ++k) alpha[k] = dir[k] + static_cast<double>(s.alloc.counts[k]);
    acc.add(log_dirichlet_pdf(star.spec.weights, alpha));
  });
  return acc.finish("estimate_pi_ordinate");
}

EvidenceResult fixed_order_evidence(const TimeSeries& series, std::size_t g,
                                    const std::vector<std::size_t>& orders,
                                    const Hyperparams& hyper, const EvidenceConfig& config,
                                    std::uint64_t seed, double log_order_prior,
                                    double log_order_posterior) {
  EvidenceResult res;
  res.g = g;
  res.orders = orders;
  auto chain = run_chain(series, g, orders, hyper, derive_seed(seed, 10));
  res.warnings = chain.warnings;
  if (g > 1) {
    if (chain.draws.size() >= config.relabel.m) {
      chain = relabel_chain(chain, config.relabel);
    } else {
      res.warnings.push_back("fixed_order_evidence: chain shorter than the relabelling warm start; "
                             "draws left as sampled");
    }
  }
  res.theta_star = select_theta_star(chain, series, hyper);

  // Reduced runs reuse the tuned proposal precisions.
  Hyperparams h = hyper;
  h.gamma = chain.gamma;
  const ChainState& star = res.theta_star;
  const auto phi = estimate_phi_ordinate(series, star, h, config.n_j, config.n_i,
                                         config.reduced_burn, derive_seed(seed, 11));
  const auto mu = estimate_mu_ordinate(series, star, h, config.n_i, config.reduced_burn,
                                       derive_seed(seed, 12));
  const auto tau = estimate_tau_ordinate(series, star, h, config.n_i, config.reduced_burn,
                                         derive_seed(seed, 13));
  const auto pi = estimate_pi_ordinate(series, star, h, config.n_i, config.reduced_burn,
                                       derive_seed(seed, 14));

  auto& p = res.parts;
  p.log_likelihood = log_likelihood(star.spec, series);
  p.log_prior = log_prior_density(star, hyper);
  p.log_phi_ordinate = phi.log_value;
  p.log_mu_ordinate = mu.log_value;
  p.log_tau_ordinate = tau.log_value;
  p.log_pi_ordinate = pi.log_value;
  p.log_order_prior = log_order_prior;
  p.log_order_posterior = log_order_posterior;
  p.log_g_prior = -std::log(static_cast<double>(std::max<std::size_t>(1, config.g_candidates)));
  res.ordinate_std_errors = {phi.std_error, mu.std_error, tau.std_error, pi.std_error};
  res.log_marginal = res.recompose();
  return res;
}

EvidenceResult marginal_log_likelihood(const TimeSeries& series, std::size_t g,
                                       const Hyperparams& hyper, const EvidenceConfig& config,
                                       std::uint64_t seed) {
  const auto rj = rjmcmc_run(series, g, hyper, config.orders, derive_seed(seed, 0));
  const auto& modal = rj.modal_orders;
  const double log_order_prior =
      -static_cast<double>(g) * std::log(static_cast<double>(config.orders.p_max));
  // The preference counts the multiset; one labelled configuration gets an
  // equal share of it.
  const double log_order_posterior =
      std::log(rj.preference) - std::log(static_cast<double>(labelled_arrangements(modal)));
  auto res = fixed_order_evidence(series, g, modal, hyper, config, derive_seed(seed, 1),
                                  log_order_prior, log_order_posterior);
  res.preference = rj.preference;
  res.warnings.insert(res.warnings.begin(), rj.output.warnings.begin(), rj.output.warnings.end());
  return res;
}

SelectionResult select_g(const TimeSeries& series, const std::vector<std::size_t>& g_range,
                         const Hyperparams& hyper, const EvidenceConfig& config,
                         std::uint64_t seed, std::size_t workers) {
  if (g_range.empty()) throw std::invalid_argument("select_g: empty range of g");
  SelectionResult out;
  out.table.resize(g_range.size());
  EvidenceConfig c = config;
  c.g_candidates = g_range.size();
  parallel_for(g_range.size(), workers, [&](std::size_t i) {
    out.table[i] = marginal_log_likelihood(series, g_range[i], hyper, c,
                                           derive_seed(seed, 1000 + g_range[i]));
  });
  const auto best = std::max_element(out.table.begin(), out.table.end(),
                                     [](const EvidenceResult& a, const EvidenceResult& b) {
                                       return a.log_marginal < b.log_marginal;
                                     });
  out.best_g = best->g;
  return out;
}

}  // namespace marbayes
