#include "marbayes/sampler.hpp"

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

std::span<const double> past_of(const TimeSeries& series, std::size_t t) {
  return std::span<const double>(series.values.data(), t);
}

// y_t - sum_i phi_{ki} y_{t-i}, i.e. the residual with the shift left in.
double ar_only_residual(const MARSpec& spec, const TimeSeries& series, std::size_t k,
                        std::size_t t) {
  return series[t] - (component_location(spec, k, past_of(series, t)) - spec.shifts[k]);
}

}  // namespace

void Hyperparams::validate(std::size_t g) const {
  if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0) || !(kappa > 0.0)) {
    throw std::invalid_argument("Hyperparams: a, b, c and kappa must be positive");
  }
  if (!std::isfinite(zeta)) throw std::invalid_argument("Hyperparams: zeta must be finite");
  if (burn_in >= n_iter) throw std::invalid_argument("Hyperparams: burn_in must be < n_iter");
  if (p_max < 1) throw std::invalid_argument("Hyperparams: p_max must be >= 1");
  if (!dirichlet_weights.empty() && dirichlet_weights.size() != g) {
    throw std::invalid_argument("Hyperparams: dirichlet_weights must have length g");
  }
  for (double w : dirichlet_weights) {
    if (!(w > 0.0)) throw std::invalid_argument("Hyperparams: Dirichlet weights must be positive");
  }
  if (!gamma.empty() && gamma.size() != g && gamma.size() != 1) {
    throw std::invalid_argument("Hyperparams: gamma must have length 1 or g");
  }
  for (double v : gamma) {
    if (!(v > 0.0)) throw std::invalid_argument("Hyperparams: gamma must be positive");
  }
}

std::vector<double> Hyperparams::dirichlet_for(std::size_t g) const {
  return dirichlet_weights.empty() ? std::vector<double>(g, 1.0) : dirichlet_weights;
}

std::vector<double> Hyperparams::gamma_for(std::size_t g) const {
  if (gamma.empty()) return std::vector<double>(g, kDefaultGamma);
  if (gamma.size() == 1) return std::vector<double>(g, gamma.front());
  return gamma;
}

Hyperparams default_hyperparams(const TimeSeries& series) {
  if (series.size() < 2) throw std::invalid_argument("default_hyperparams: series too short");
  const auto [lo, hi] = std::minmax_element(series.values.begin(), series.values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw std::invalid_argument("default_hyperparams: constant series");
  Hyperparams h;
  h.zeta = *lo + range / 2.0;
  h.kappa = 1.0 / range;
  h.b = 10.0 / (range * range);
  return h;
}

std::vector<double> allocation_probabilities(const MARSpec& spec, const TimeSeries& series,
                                             std::size_t t) {
  const std::size_t g = spec.components();
  std::vector<double> logw(g);
  for (std::size_t k = 0; k < g; ++k) {
    logw[k] = std::log(spec.weights[k]) +
              log_normal_pdf(series[t], component_location(spec, k, past_of(series, t)),
                             spec.scales[k]);
  }
  const double norm = log_sum_exp(logw);
  if (!std::isfinite(norm)) {
    std::ostringstream msg;
    msg << "allocation_probabilities: every component density underflows at t = " << t;
    throw std::domain_error(msg.str());
  }
  for (double& w : logw) w = std::exp(w - norm);
  return logw;
}

LatentAllocation sample_allocations(const ChainState& state, const TimeSeries& series, Rng& rng) {
  const MARSpec& spec = state.spec;
  const std::size_t p = spec.max_order();
  std::vector<int> labels;
  labels.reserve(series.size() - p);
  for (std::size_t t = p; t < series.size(); ++t) {
    const auto probs = allocation_probabilities(spec, series, t);
    labels.push_back(static_cast<int>(draw_categorical(rng, probs)));
  }
  return LatentAllocation(p, std::move(labels), spec.components());
}

std::vector<double> sample_weights(const LatentAllocation& alloc,
                                   std::span<const double> dirichlet_weights, Rng& rng) {
  if (dirichlet_weights.size() != alloc.counts.size()) {
    throw std::invalid_argument("sample_weights: prior weights do not match component count");
  }
  std::vector<double> alpha(alloc.counts.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    alpha[k] = dirichlet_weights[k] + static_cast<double>(alloc.counts[k]);
  }
  auto pi = draw_dirichlet(rng, alpha);
  // Renormalise so the sum-to-one invariant holds to rounding.
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& w : pi) w /= total;
  return pi;
}

std::vector<double> sample_weights(const LatentAllocation& alloc, Rng& rng) {
  const std::vector<double> ones(alloc.counts.size(), 1.0);
  return sample_weights(alloc, ones, rng);
}

NormalParams mean_full_conditional(const ChainState& state, const TimeSeries& series,
                                   const Hyperparams& hyper, std::size_t k) {
  const MARSpec& spec = state.spec;
  const double b_k = 1.0 - spec.ar_sum(k);
  const double tau = spec.precision(k);
  double sum = 0.0;
  std::size_t n_k = 0;
  for (std::size_t t = state.alloc.offset; t < state.alloc.end(); ++t) {
    if (static_cast<std::size_t>(state.alloc.label_at(t)) != k) continue;
    sum += ar_only_residual(spec, series, k, t);
    ++n_k;
  }
  const double nk = static_cast<double>(n_k);
  const double precision = tau * nk * b_k * b_k + hyper.kappa;
  // tau n_k ebar_k b_k with ebar_k = sum / n_k.
  return {(tau * sum * b_k + hyper.kappa * hyper.zeta) / precision, 1.0 / precision};
}

std::vector<double> sample_means(const ChainState& state, const TimeSeries& series,
                                 const Hyperparams& hyper, Rng& rng) {
  std::vector<double> means(state.spec.components());
  for (std::size_t k = 0; k < means.size(); ++k) {
    const auto post = mean_full_conditional(state, series, hyper, k);
    means[k] = draw_normal(rng, post.mean, std::sqrt(post.variance));
  }
  return means;
}

GammaParams lambda_full_conditional(const ChainState& state, const Hyperparams& hyper) {
  const std::size_t g = state.spec.components();
  double tau_sum = 0.0;
  for (std::size_t k = 0; k < g; ++k) tau_sum += state.spec.precision(k);
  return {hyper.a + static_cast<double>(g) * hyper.c, hyper.b + tau_sum};
}

double sample_lambda(const ChainState& state, const Hyperparams& hyper, Rng& rng) {
  const auto post = lambda_full_conditional(state, hyper);
  return draw_gamma(rng, post.shape, post.rate);
}

GammaParams precision_full_conditional(const ChainState& state, const TimeSeries& series,
                                       const Hyperparams& hyper, std::size_t k) {
  double sse = 0.0;
  std::size_t n_k = 0;
  for (std::size_t t = state.alloc.offset; t < state.alloc.end(); ++t) {
    if (static_cast<std::size_t>(state.alloc.label_at(t)) != k) continue;
    const double e = component_residual(state.spec, series, k, t);
    sse += e * e;
    ++n_k;
  }
  return {hyper.c + 0.5 * static_cast<double>(n_k), state.lambda + 0.5 * sse};
}

std::vector<double> sample_precisions(const ChainState& state, const TimeSeries& series,
                                      const Hyperparams& hyper, Rng& rng) {
  std::vector<double> scales(state.spec.components());
  for (std::size_t k = 0; k < scales.size(); ++k) {
    const auto post = precision_full_conditional(state, series, hyper, k);
    double tau = draw_gamma(rng, post.shape, post.rate);
    tau = std::max(tau, std::numeric_limits<double>::min());
    scales[k] = 1.0 / std::sqrt(tau);
  }
  return scales;
}

double component_log_likelihood_ratio(const MARSpec& spec, const TimeSeries& series,
                                      const LatentAllocation& alloc, std::size_t k,
                                      std::span<const double> proposed_ar, double proposed_shift,
                                      std::size_t from) {
  const double tau = spec.precision(k);
  const auto& current = spec.ar[k];
  double delta = 0.0;
  for (std::size_t t = std::max(from, alloc.offset); t < alloc.end(); ++t) {
    if (static_cast<std::size_t>(alloc.label_at(t)) != k) continue;
    double nu_cur = spec.shifts[k];
    for (std::size_t i = 0; i < current.size(); ++i) nu_cur += current[i] * series[t - 1 - i];
    double nu_new = proposed_shift;
    for (std::size_t i = 0; i < proposed_ar.size(); ++i) nu_new += proposed_ar[i] * series[t - 1 - i];
    const double e_cur = series[t] - nu_cur;
    const double e_new = series[t] - nu_new;
    delta += e_new * e_new - e_cur * e_cur;
  }
  return -0.5 * tau * delta;
}

double shift_for(const ChainState& state, const Hyperparams& hyper, std::size_t k,
                 std::span<const double> coefficients) {
  if (hyper.fixed_shift) return 0.0;
  return shift_from_mean(state.means.at(k), coefficients);
}

RwmResult rwm_update_ar(const ChainState& state, const TimeSeries& series,
                        const Hyperparams& hyper, std::size_t k, Rng& rng) {
  const auto gamma = hyper.gamma_for(state.spec.components());
  const double sd = 1.0 / std::sqrt(gamma.at(k));
  RwmResult out;
  out.coefficients = state.spec.ar.at(k);
  for (double& c : out.coefficients) c += draw_normal(rng, 0.0, sd);
  out.shift = shift_for(state, hyper, k, out.coefficients);
  const double log_ratio = component_log_likelihood_ratio(state.spec, series, state.alloc, k,
                                                          out.coefficients, out.shift);
  out.acceptance_probability = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
  out.accepted = draw_uniform(rng, 0.0, 1.0) < out.acceptance_probability;
  if (!out.accepted) {
    out.coefficients = state.spec.ar[k];
    out.shift = state.spec.shifts[k];
  }
  return out;
}

SweepResult candidate_sweep(const ChainState& state, const TimeSeries& series,
                            const Hyperparams& hyper, Rng& rng, const SweepPins& pins) {
  const std::size_t g = state.spec.components();
  SweepResult out;
  out.state = state;
  ChainState& s = out.state;

  s.alloc = sample_allocations(s, series, rng);
  if (!pins.weights) s.spec.weights = sample_weights(s.alloc, hyper.dirichlet_for(g), rng);
  if (!hyper.fixed_shift && !pins.means) {
    s.means = sample_means(s, series, hyper, rng);
    for (std::size_t k = 0; k < g; ++k) s.spec.shifts[k] = shift_for(s, hyper, k, s.spec.ar[k]);
  }
  s.lambda = sample_lambda(s, hyper, rng);
  if (!pins.precisions) s.spec.scales = sample_precisions(s, series, hyper, rng);

  out.ar_acceptance.assign(g, 0.0);
  out.ar_accepted.assign(g, 0);
  for (std::size_t k = 0; k < g; ++k) {
    if (pins.ar_pinned(k)) continue;
    auto move = rwm_update_ar(s, series, hyper, k, rng);
    out.ar_acceptance[k] = move.acceptance_probability;
    out.ar_accepted[k] = move.accepted ? 1 : 0;
    if (move.accepted) {
      s.spec.ar[k] = std::move(move.coefficients);
      s.spec.shifts[k] = move.shift;
    }
  }
  return out;
}

SweepResult stability_gate(const ChainState& previous, SweepResult candidate) {
  if (is_stable(candidate.state.spec).stable) return candidate;
  candidate.state = previous;
  candidate.stability_rejected = true;
  std::fill(candidate.ar_accepted.begin(), candidate.ar_accepted.end(), 0);
  return candidate;
}

SweepResult gibbs_sweep(const ChainState& state, const TimeSeries& series,
                        const Hyperparams& hyper, Rng& rng, const SweepPins& pins) {
  return stability_gate(state, candidate_sweep(state, series, hyper, rng, pins));
}

ChainState initial_state(const TimeSeries& series, std::size_t g,
                         const std::vector<std::size_t>& orders, const Hyperparams& hyper) {
  if (g < 1) throw std::invalid_argument("initial_state: g must be >= 1");
  if (orders.size() != g) throw std::invalid_argument("initial_state: need one order per component");
  for (auto o : orders) {
    if (o < 1) throw std::invalid_argument("initial_state: orders must be >= 1");
  }
  const std::size_t p = *std::max_element(orders.begin(), orders.end());
  const std::size_t n = series.size();
  if (n <= p + g) throw std::invalid_argument("initial_state: series too short for the model");
  const std::size_t m = n - p;

  const double mean = std::accumulate(series.values.begin(), series.values.end(), 0.0) /
                      static_cast<double>(n);
  double var = 0.0;
  for (double y : series.values) var += (y - mean) * (y - mean);
  var /= static_cast<double>(n);
  if (!(var > 0.0)) throw std::invalid_argument("initial_state: constant series");

  auto ridge_fit = [&](const std::vector<std::size_t>& times, std::size_t order) {
    const auto q = static_cast<Eigen::Index>(order);
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(q, q);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(q);
    for (std::size_t t : times) {
      Eigen::VectorXd x(q);
      for (Eigen::Index i = 0; i < q; ++i) x(i) = series[t - 1 - static_cast<std::size_t>(i)] - mean;
      xtx += x * x.transpose();
      xty += x * (series[t] - mean);
    }
    const double ridge = 1e-3 * static_cast<double>(times.size()) * var + 1e-9;
    xtx += ridge * Eigen::MatrixXd::Identity(q, q);
    const Eigen::VectorXd beta = xtx.ldlt().solve(xty);
    return std::vector<double>(beta.data(), beta.data() + beta.size());
  };

  std::vector<std::size_t> all_times(m);
  std::iota(all_times.begin(), all_times.end(), p);
  const auto global = ridge_fit(all_times, p);

  // Bin |residual| of the global fit into g equal-frequency groups, so the
  // components start ordered by scale.
  std::vector<double> abs_resid(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t t = p + i;
    double fit = mean;
    for (std::size_t j = 0; j < p; ++j) fit += global[j] * (series[t - 1 - j] - mean);
    abs_resid[i] = std::abs(series[t] - fit);
  }
  std::vector<std::size_t> rank(m);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t x, std::size_t y) { return abs_resid[x] < abs_resid[y]; });
  std::vector<int> labels(m);
  std::vector<std::vector<std::size_t>> members(g);
  for (std::size_t r = 0; r < m; ++r) {
    const auto k = static_cast<int>(r * g / m);
    labels[rank[r]] = k;
    members[static_cast<std::size_t>(k)].push_back(p + rank[r]);
  }

  ChainState state;
  state.spec.weights.assign(g, 1.0 / static_cast<double>(g));
  state.spec.scales.assign(g, std::sqrt(var));
  state.spec.ar.resize(g);
  for (std::size_t k = 0; k < g; ++k) state.spec.ar[k] = ridge_fit(members[k], orders[k]);
  state.means.assign(g, hyper.fixed_shift ? 0.0 : mean);
  state.spec.shifts.assign(g, 0.0);

  for (int attempt = 0; attempt < 400 && !is_stable(state.spec).stable; ++attempt) {
    for (auto& c : state.spec.ar) {
      for (double& v : c) v *= 0.9;
    }
  }
  if (!is_stable(state.spec).stable) {
    for (auto& c : state.spec.ar) std::fill(c.begin(), c.end(), 0.0);
  }
  for (std::size_t k = 0; k < g; ++k) state.spec.shifts[k] = shift_for(state, hyper, k, state.spec.ar[k]);
  // Exact 1/g weights may not sum to one in floating point for g = 3.
  state.spec.weights.back() =
      1.0 - std::accumulate(state.spec.weights.begin(), state.spec.weights.end() - 1, 0.0);
  state.spec.validate();

  state.alloc = LatentAllocation(p, std::move(labels), g);
  const auto lam = lambda_full_conditional(state, hyper);
  state.lambda = lam.shape / lam.rate;
  return state;
}

TuningResult tune_gamma(const ChainState& start, const TimeSeries& series,
                        const Hyperparams& hyper, std::size_t pilot_iters, Rng& rng) {
  const std::size_t g = start.spec.components();
  Hyperparams h = hyper;
  h.gamma = hyper.gamma_for(g);
  TuningResult out;
  out.state = start;
  if (pilot_iters == 0) {
    out.gamma = h.gamma;
    out.acceptance.assign(g, 0.0);
    return out;
  }
  std::vector<double> log_gamma(g);
  for (std::size_t k = 0; k < g; ++k) log_gamma[k] = std::log(h.gamma[k]);

  // Acceptance is averaged over the second half of the pilot.
  const std::size_t tail_start = pilot_iters / 2;
  std::vector<double> tail_sum(g, 0.0);
  std::vector<std::size_t> tail_count(g, 0);
  for (std::size_t i = 0; i < pilot_iters; ++i) {
    auto res = gibbs_sweep(out.state, series, h, rng);
    const double step = 1.0 / std::pow(1.0 + static_cast<double>(i) / 20.0, 0.6);
    for (std::size_t k = 0; k < g; ++k) {
      // Empty components always accept and carry no information about gamma.
      if (res.state.alloc.counts[k] == 0 && res.ar_acceptance[k] >= 1.0) continue;
      log_gamma[k] -= step * (res.ar_acceptance[k] - Hyperparams::kTargetAcceptance);
      log_gamma[k] = std::clamp(log_gamma[k], std::log(1e-4), std::log(1e10));
      h.gamma[k] = std::exp(log_gamma[k]);
      if (i >= tail_start) {
        tail_sum[k] += res.ar_acceptance[k];
        ++tail_count[k];
      }
    }
    out.state = std::move(res.state);
  }
  out.gamma = h.gamma;
  out.acceptance.resize(g);
  for (std::size_t k = 0; k < g; ++k) {
    out.acceptance[k] = tail_count[k] ? tail_sum[k] / static_cast<double>(tail_count[k]) : 1.0;
    if (out.acceptance[k] < 0.01 || out.acceptance[k] > 0.99) {
      std::ostringstream msg;
      msg << "tune_gamma: acceptance for component " << k + 1 << " pinned at "
          << out.acceptance[k] << " after " << pilot_iters << " pilot sweeps";
      out.warnings.push_back(msg.str());
    }
  }
  return out;
}

ChainOutput run_chain(const TimeSeries& series, std::size_t g,
                      const std::vector<std::size_t>& orders, const Hyperparams& hyper,
                      std::uint64_t seed) {
  hyper.validate(g);
  Rng rng(seed);
  ChainOutput out;
  out.seed = seed;

  ChainState state = initial_state(series, g, orders, hyper);
  Hyperparams h = hyper;
  h.gamma = hyper.gamma_for(g);
  if (hyper.tune) {
    auto tuned = tune_gamma(state, series, h, hyper.pilot_iters, rng);
    h.gamma = tuned.gamma;
    out.pilot_acceptance = tuned.acceptance;
    out.warnings = std::move(tuned.warnings);
    state = std::move(tuned.state);
  }
  out.gamma = h.gamma;

  std::vector<double> accepted(g, 0.0);
  out.draws.reserve(hyper.n_iter - hyper.burn_in);
  for (std::size_t it = 1; it <= hyper.n_iter; ++it) {
    auto res = gibbs_sweep(state, series, h, rng);
    if (res.stability_rejected) ++out.stability_rejections;
    for (std::size_t k = 0; k < g; ++k) accepted[k] += res.ar_accepted[k];
    state = std::move(res.state);
    state.iteration = it;
    if (it > hyper.burn_in) {
      out.draws.push_back(state);
      if (!hyper.keep_allocations) out.draws.back().alloc.labels.clear();
    }
  }
  out.acceptance.resize(g);
  for (std::size_t k = 0; k < g; ++k) {
    out.acceptance[k] = accepted[k] / static_cast<double>(hyper.n_iter);
  }
  return out;
}

}  // namespace marbayes
