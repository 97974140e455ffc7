#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "marbayes/sampler.hpp"

namespace marbayes {

struct OrderMoveConfig {
  std::size_t p_max = 5;
  // b(p) for 1 < p < p_max; b(1) = 1 and b(p_max) = 0 regardless.
  double birth_prob = 0.5;
  double half_width = 1.5;
  // Use the constant phi(0) sqrt(gamma_k) density factor in deaths instead of
  // the uniform proposal density that mirrors the birth move.
  bool literal_death_factor = false;
  // Starting orders; empty means every component starts at order 1.
  std::vector<std::size_t> initial_orders;

  void validate() const;
  double birth(std::size_t p) const;
  double death(std::size_t p) const;
};

enum class OrderMove { birth, death };

// nullopt when neither move is possible (p_max = 1).
std::optional<OrderMove> propose_order_move(std::size_t p_k, const OrderMoveConfig& config,
                                            Rng& rng);

// Replaceable pieces of the acceptance ratio. Tests substitute a flat
// likelihood or drop the stability veto; empty members use the defaults
// (component_log_likelihood_ratio and is_stable).
struct OrderMoveHooks {
  std::function<double(const ChainState&, const TimeSeries&, std::size_t k,
                       std::span<const double> ar, double shift, std::size_t from)>
      log_likelihood_ratio;
  std::function<bool(const MARSpec&)> admissible;
};

struct OrderProposal {
  double acceptance = 0.0;
  std::vector<double> coefficients;
  double shift = 0.0;
  bool admissible = true;
};

// Drops the last coefficient of component k (requires order >= 2).
OrderProposal death_acceptance(const ChainState& state, const TimeSeries& series,
                               const Hyperparams& hyper, const OrderMoveConfig& config,
                               std::size_t k, const OrderMoveHooks& hooks = {});

// Appends u ~ U(-half_width, half_width) to component k (requires order < p_max).
OrderProposal birth_acceptance(const ChainState& state, const TimeSeries& series,
                               const Hyperparams& hyper, const OrderMoveConfig& config,
                               std::size_t k, Rng& rng, const OrderMoveHooks& hooks = {});
// Same with the new coefficient given.
OrderProposal birth_acceptance_at(const ChainState& state, const TimeSeries& series,
                                  const Hyperparams& hyper, const OrderMoveConfig& config,
                                  std::size_t k, double coefficient,
                                  const OrderMoveHooks& hooks = {});

struct OrderStep {
  ChainState state;
  std::size_t component = 0;
  std::optional<OrderMove> move;
  bool accepted = false;
};

// Picks a component uniformly, proposes a birth or death and accepts or
// rejects it.
OrderStep order_move(const ChainState& state, const TimeSeries& series, const Hyperparams& hyper,
                     const OrderMoveConfig& config, Rng& rng, const OrderMoveHooks& hooks = {});

// Labels are arbitrary, so configurations are counted as multisets of
// orders, written in decreasing order: (1, 2) and (2, 1) are both (2, 1).
std::vector<std::size_t> canonical_orders(std::vector<std::size_t> orders);
// Number of distinct labelled configurations sharing this multiset.
std::size_t labelled_arrangements(const std::vector<std::size_t>& orders);

struct OrderTrace {
  // Per-iteration orders as stored in the chain.
  std::vector<std::vector<std::size_t>> orders;
  // Visits keyed by canonical configuration.
  std::map<std::vector<std::size_t>, std::size_t> visits;

  void record(const std::vector<std::size_t>& o);
  // Most visited canonical configuration; ties go to the lexicographically
  // smallest.
  std::vector<std::size_t> modal() const;
  // visits(modal) / visits(all).
  double preference() const;
};

struct RjmcmcResult {
  OrderTrace trace;
  ChainOutput output;
  std::vector<std::size_t> modal_orders;
  double preference = 0.0;
  std::size_t births_proposed = 0, births_accepted = 0;
  std::size_t deaths_proposed = 0, deaths_accepted = 0;
};

// Pilot tuning at the initial orders, then n_iter sweeps each followed by one
// order move. Orders are recorded after burn-in.
RjmcmcResult rjmcmc_run(const TimeSeries& series, std::size_t g, const Hyperparams& hyper,
                        const OrderMoveConfig& config, std::uint64_t seed,
                        const OrderMoveHooks& hooks = {});

}  // namespace marbayes
