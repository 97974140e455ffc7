#include "marbayes/rjmcmc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "marbayes/stability.hpp"

namespace marbayes {

void OrderMoveConfig::validate() const {
  if (p_max < 1) throw std::invalid_argument("OrderMoveConfig: p_max must be >= 1");
  if (!(birth_prob > 0.0 && birth_prob < 1.0)) {
    throw std::invalid_argument("OrderMoveConfig: birth_prob must lie in (0, 1)");
  }
  if (!(half_width > 0.0)) throw std::invalid_argument("OrderMoveConfig: half_width must be positive");
  for (auto p : initial_orders) {
    if (p < 1 || p > p_max) {
      throw std::invalid_argument("OrderMoveConfig: initial orders must lie in [1, p_max]");
    }
  }
}

double OrderMoveConfig::birth(std::size_t p) const {
  if (p >= p_max) return 0.0;
  if (p <= 1) return 1.0;
  return birth_prob;
}

double OrderMoveConfig::death(std::size_t p) const {
  if (p <= 1) return 0.0;
  if (p >= p_max) return 1.0;
  return 1.0 - birth_prob;
}

std::optional<OrderMove> propose_order_move(std::size_t p_k, const OrderMoveConfig& config,
                                            Rng& rng) {
  const double b = config.birth(p_k);
  const double d = config.death(p_k);
  if (b == 0.0 && d == 0.0) return std::nullopt;
  if (d == 0.0) return OrderMove::birth;
  if (b == 0.0) return OrderMove::death;
  return draw_uniform(rng, 0.0, 1.0) < b ? OrderMove::birth : OrderMove::death;
}

namespace {

double log_lr(const OrderMoveHooks& hooks, const ChainState& state, const TimeSeries& series,
              std::size_t k, std::span<const double> ar, double shift, std::size_t from) {
  if (hooks.log_likelihood_ratio) return hooks.log_likelihood_ratio(state, series, k, ar, shift, from);
  return component_log_likelihood_ratio(state.spec, series, state.alloc, k, ar, shift, from);
}

bool admissible(const OrderMoveHooks& hooks, const MARSpec& spec) {
  return hooks.admissible ? hooks.admissible(spec) : is_stable(spec).stable;
}

MARSpec with_component(const MARSpec& spec, std::size_t k, const std::vector<double>& ar,
                       double shift) {
  MARSpec out = spec;
  out.ar[k] = ar;
  out.shifts[k] = shift;
  return out;
}

double accept_prob(double log_ratio) { return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio); }

}  // namespace

OrderProposal death_acceptance(const ChainState& state, const TimeSeries& series,
                               const Hyperparams& hyper, const OrderMoveConfig& config,
                               std::size_t k, const OrderMoveHooks& hooks) {
  const std::size_t p = state.spec.order(k);
  if (p < 2) throw std::invalid_argument("death_acceptance: order is already 1");
  OrderProposal out;
  out.coefficients.assign(state.spec.ar[k].begin(), state.spec.ar[k].end() - 1);
  out.shift = shift_for(state, hyper, k, out.coefficients);
  out.admissible = admissible(hooks, with_component(state.spec, k, out.coefficients, out.shift));
  if (!out.admissible) return out;

  double log_factor = std::log(config.birth(p - 1) / config.death(p));
  if (config.literal_death_factor) {
    const double gamma = hyper.gamma_for(state.spec.components()).at(k);
    log_factor += -0.5 * std::log(2.0 * std::numbers::pi) + 0.5 * std::log(gamma);
  } else {
    log_factor -= std::log(2.0 * config.half_width);
  }
  const double lr = log_lr(hooks, state, series, k, out.coefficients, out.shift, state.alloc.offset);
  out.acceptance = accept_prob(lr + log_factor);
  return out;
}

OrderProposal birth_acceptance_at(const ChainState& state, const TimeSeries& series,
                                  const Hyperparams& hyper, const OrderMoveConfig& config,
                                  std::size_t k, double coefficient,
                                  const OrderMoveHooks& hooks) {
  const std::size_t p = state.spec.order(k);
  if (p >= config.p_max) throw std::invalid_argument("birth_acceptance: order is already p_max");
  OrderProposal out;
  out.coefficients = state.spec.ar[k];
  out.coefficients.push_back(coefficient);
  out.shift = shift_for(state, hyper, k, out.coefficients);
  out.admissible = admissible(hooks, with_component(state.spec, k, out.coefficients, out.shift));
  if (!out.admissible) return out;

  const double log_factor =
      std::log(config.death(p + 1) / config.birth(p)) + std::log(2.0 * config.half_width);
  const std::size_t from = std::max(state.alloc.offset, p + 1);
  const double lr = log_lr(hooks, state, series, k, out.coefficients, out.shift, from);
  out.acceptance = accept_prob(lr + log_factor);
  return out;
}

OrderProposal birth_acceptance(const ChainState& state, const TimeSeries& series,
                               const Hyperparams& hyper, const OrderMoveConfig& config,
                               std::size_t k, Rng& rng, const OrderMoveHooks& hooks) {
  const double u = draw_uniform(rng, -config.half_width, config.half_width);
  return birth_acceptance_at(state, series, hyper, config, k, u, hooks);
}

OrderStep order_move(const ChainState& state, const TimeSeries& series, const Hyperparams& hyper,
                     const OrderMoveConfig& config, Rng& rng, const OrderMoveHooks& hooks) {
  OrderStep out;
  out.state = state;
  const std::size_t g = state.spec.components();
  out.component = static_cast<std::size_t>(draw_uniform(rng, 0.0, static_cast<double>(g)));
  out.component = std::min(out.component, g - 1);
  const std::size_t k = out.component;
  out.move = propose_order_move(state.spec.order(k), config, rng);
  if (!out.move) return out;

  const OrderProposal prop = *out.move == OrderMove::birth
                                 ? birth_acceptance(state, series, hyper, config, k, rng, hooks)
                                 : death_acceptance(state, series, hyper, config, k, hooks);
  if (!prop.admissible) return out;
  out.accepted = draw_uniform(rng, 0.0, 1.0) < prop.acceptance;
  if (out.accepted) {
    out.state.spec.ar[k] = prop.coefficients;
    out.state.spec.shifts[k] = prop.shift;
    const std::size_t p = out.state.spec.max_order();
    if (p > out.state.alloc.offset) out.state.alloc.trim_front(p);
  }
  return out;
}

std::vector<std::size_t> canonical_orders(std::vector<std::size_t> orders) {
  std::sort(orders.begin(), orders.end(), std::greater<>());
  return orders;
}

std::size_t labelled_arrangements(const std::vector<std::size_t>& orders) {
  // g! / prod(multiplicity!)
  auto sorted = canonical_orders(orders);
  std::size_t num = 1;
  for (std::size_t i = 2; i <= sorted.size(); ++i) num *= i;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
      continue;
    }
    for (std::size_t j = 2; j <= run; ++j) num /= j;
    run = 1;
  }
  return num;
}

void OrderTrace::record(const std::vector<std::size_t>& o) {
  orders.push_back(o);
  ++visits[canonical_orders(o)];
}

std::vector<std::size_t> OrderTrace::modal() const {
  std::vector<std::size_t> best;
  std::size_t best_count = 0;
  // std::map iterates in lexicographic order, so strict > keeps the smallest.
  for (const auto& [cfg, count] : visits) {
    if (count > best_count) {
      best = cfg;
      best_count = count;
    }
  }
  return best;
}

double OrderTrace::preference() const {
  if (orders.empty()) return 0.0;
  return static_cast<double>(visits.at(modal())) / static_cast<double>(orders.size());
}

RjmcmcResult rjmcmc_run(const TimeSeries& series, std::size_t g, const Hyperparams& hyper,
                        const OrderMoveConfig& config, std::uint64_t seed,
                        const OrderMoveHooks& hooks) {
  hyper.validate(g);
  config.validate();
  if (!config.initial_orders.empty() && config.initial_orders.size() != g) {
    throw std::invalid_argument("rjmcmc_run: initial_orders must have length g");
  }
  const std::vector<std::size_t> start_orders =
      config.initial_orders.empty() ? std::vector<std::size_t>(g, 1) : config.initial_orders;

  Rng rng(seed);
  RjmcmcResult out;
  out.output.seed = seed;
  ChainState state = initial_state(series, g, start_orders, hyper);
  Hyperparams h = hyper;
  h.gamma = hyper.gamma_for(g);
  if (hyper.tune) {
    auto tuned = tune_gamma(state, series, h, hyper.pilot_iters, rng);
    h.gamma = tuned.gamma;
    out.output.pilot_acceptance = tuned.acceptance;
    out.output.warnings = std::move(tuned.warnings);
    state = std::move(tuned.state);
  }
  out.output.gamma = h.gamma;

  std::vector<double> accepted(g, 0.0);
  for (std::size_t it = 1; it <= hyper.n_iter; ++it) {
    auto sweep = gibbs_sweep(state, series, h, rng);
    if (sweep.stability_rejected) ++out.output.stability_rejections;
    for (std::size_t k = 0; k < g; ++k) accepted[k] += sweep.ar_accepted[k];
    auto step = order_move(sweep.state, series, h, config, rng, hooks);
    if (step.move == OrderMove::birth) {
      ++out.births_proposed;
      out.births_accepted += step.accepted;
    } else if (step.move == OrderMove::death) {
      ++out.deaths_proposed;
      out.deaths_accepted += step.accepted;
    }
    state = std::move(step.state);
    state.iteration = it;
    if (it > hyper.burn_in) {
      out.trace.record(state.spec.orders());
      out.output.draws.push_back(state);
      if (!hyper.keep_allocations) out.output.draws.back().alloc.labels.clear();
    }
  }
  out.output.acceptance.resize(g);
  for (std::size_t k = 0; k < g; ++k) {
    out.output.acceptance[k] = accepted[k] / static_cast<double>(hyper.n_iter);
  }
  out.modal_orders = out.trace.modal();
  out.preference = out.trace.preference();
  return out;
}

}  // namespace marbayes
