#include "marbayes/relabel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace marbayes {

RelabelParam parse_relabel_param(const std::string& name) {
  if (name == "weights") return RelabelParam::weights;
  if (name == "scales") return RelabelParam::scales;
  if (name == "means") return RelabelParam::means;
  throw std::invalid_argument("unknown relabel parameter '" + name +
                              "' (expected weights, scales or means)");
}

std::string to_string(RelabelParam p) {
  switch (p) {
    case RelabelParam::weights: return "weights";
    case RelabelParam::scales: return "scales";
    case RelabelParam::means: return "means";
  }
  return "?";
}

void RelabelConfig::validate() const {
  if (m < 2) throw std::invalid_argument("RelabelConfig: m must be >= 2");
  if (subset.empty()) throw std::invalid_argument("RelabelConfig: parameter subset is empty");
  for (std::size_t i = 0; i < subset.size(); ++i) {
    for (std::size_t j = i + 1; j < subset.size(); ++j) {
      if (subset[i] == subset[j]) {
        throw std::invalid_argument("RelabelConfig: '" + to_string(subset[i]) + "' listed twice");
      }
    }
  }
}

std::vector<double> relabel_coordinates(const ChainState& draw, const RelabelConfig& config) {
  const std::size_t g = draw.spec.components();
  std::vector<double> theta;
  theta.reserve(config.coordinates(g));
  for (RelabelParam p : config.subset) {
    for (std::size_t k = 0; k < g; ++k) {
      switch (p) {
        case RelabelParam::weights: theta.push_back(draw.spec.weights[k]); break;
        case RelabelParam::scales: theta.push_back(draw.spec.scales[k]); break;
        case RelabelParam::means: theta.push_back(draw.means.at(k)); break;
      }
    }
  }
  return theta;
}

ClusterCentres init_centres(std::span<const ChainState> draws, const RelabelConfig& config) {
  config.validate();
  if (draws.size() < config.m) {
    std::ostringstream msg;
    msg << "init_centres: need " << config.m << " draws for the warm start, have " << draws.size();
    throw std::invalid_argument(msg.str());
  }
  const std::size_t g = draws.front().spec.components();
  const std::size_t q = config.coordinates(g);
  ClusterCentres c;
  c.centre.assign(q, 0.0);
  c.variance.assign(q, 0.0);
  const double m = static_cast<double>(config.m);
  for (std::size_t r = 0; r < config.m; ++r) {
    const auto theta = relabel_coordinates(draws[r], config);
    for (std::size_t i = 0; i < q; ++i) c.centre[i] += theta[i] / m;
  }
  for (std::size_t r = 0; r < config.m; ++r) {
    const auto theta = relabel_coordinates(draws[r], config);
    for (std::size_t i = 0; i < q; ++i) {
      const double d = theta[i] - c.centre[i];
      c.variance[i] += d * d / m;
    }
  }
  for (std::size_t i = 0; i < q; ++i) {
    if (!(c.variance[i] > 0.0)) {
      std::ostringstream msg;
      msg << "init_centres: coordinate " << i << " (" << to_string(config.subset[i / g])
          << " of component " << i % g + 1
          << ") has zero variance over the warm start; use a larger m or a different "
             "parameter subset";
      throw std::invalid_argument(msg.str());
    }
  }
  c.count = config.m;
  return c;
}

double normalised_distance(std::span<const double> theta, const ClusterCentres& centres) {
  double d = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double diff = theta[i] - centres.centre[i];
    d += diff * diff / centres.variance[i];
  }
  return d;
}

Permutation assign_permutation(const ChainState& draw, const ClusterCentres& centres,
                               const RelabelConfig& config) {
  const std::size_t g = draw.spec.components();
  const auto theta = relabel_coordinates(draw, config);
  Permutation perm(g);
  std::iota(perm.begin(), perm.end(), 0);
  Permutation best = perm;
  double best_d = std::numeric_limits<double>::infinity();
  std::vector<double> moved(theta.size());
  // next_permutation visits permutations in lexicographic order, so a strict
  // comparison keeps the smallest among ties.
  do {
    for (std::size_t b = 0; b < config.subset.size(); ++b) {
      for (std::size_t j = 0; j < g; ++j) moved[b * g + perm[j]] = theta[b * g + j];
    }
    const double d = normalised_distance(moved, centres);
    if (d < best_d) {
      best_d = d;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

ChainState apply_permutation(const ChainState& draw, const Permutation& perm) {
  const std::size_t g = draw.spec.components();
  if (perm.size() != g) throw std::invalid_argument("apply_permutation: wrong permutation length");
  ChainState out = draw;
  for (std::size_t j = 0; j < g; ++j) {
    const std::size_t to = perm[j];
    out.spec.weights[to] = draw.spec.weights[j];
    out.spec.shifts[to] = draw.spec.shifts[j];
    out.spec.ar[to] = draw.spec.ar[j];
    out.spec.scales[to] = draw.spec.scales[j];
    if (j < draw.means.size()) out.means[to] = draw.means[j];
    if (j < draw.alloc.counts.size()) out.alloc.counts[to] = draw.alloc.counts[j];
  }
  for (int& z : out.alloc.labels) z = static_cast<int>(perm[static_cast<std::size_t>(z)]);
  return out;
}

ClusterCentres update_centres(const ClusterCentres& centres, std::span<const double> theta) {
  ClusterCentres out = centres;
  const double n = static_cast<double>(centres.count + 1);
  const double keep = (n - 1.0) / n;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double old_mean = centres.centre[i];
    const double new_mean = keep * old_mean + theta[i] / n;
    const double a = old_mean - new_mean;
    const double b = theta[i] - new_mean;
    out.centre[i] = new_mean;
    out.variance[i] = keep * centres.variance[i] + keep * a * a + b * b / n;
  }
  out.count = centres.count + 1;
  return out;
}

ChainOutput relabel_chain(const ChainOutput& output, const RelabelConfig& config,
                          std::vector<Permutation>* applied) {
  config.validate();
  ChainOutput out = output;
  if (out.draws.empty()) return out;
  const std::size_t g = out.draws.front().spec.components();
  Permutation identity(g);
  std::iota(identity.begin(), identity.end(), 0);
  if (applied) applied->assign(out.draws.size(), identity);
  if (g == 1) return out;

  ClusterCentres centres = init_centres(out.draws, config);
  const auto warm = centres;
  for (std::size_t r = config.m; r < out.draws.size(); ++r) {
    const auto perm = assign_permutation(out.draws[r], centres, config);
    if (perm != identity) out.draws[r] = apply_permutation(out.draws[r], perm);
    if (applied) (*applied)[r] = perm;
    centres = update_centres(centres, relabel_coordinates(out.draws[r], config));
  }

  // A warm start that straddles a switch has inflated variance compared with
  // the relabelled chain as a whole.
  for (std::size_t i = 0; i < centres.variance.size(); ++i) {
    if (warm.variance[i] > config.warm_start_ratio * centres.variance[i]) {
      std::ostringstream msg;
      msg << "relabel_chain: warm-start variance of " << to_string(config.subset[i / g])
          << " for component " << i % g + 1 << " is " << warm.variance[i] / centres.variance[i]
          << " times its full-chain variance; a label switch inside the first " << config.m
          << " draws is likely";
      out.warnings.push_back(msg.str());
    }
  }
  return out;
}

ChainOutput order_components(const ChainOutput& output, RelabelParam by, Permutation* applied) {
  ChainOutput out = output;
  if (output.draws.empty()) return out;
  const std::size_t g = output.draws.front().spec.components();
  RelabelConfig one;
  one.subset = {by};
  std::vector<double> mean(g, 0.0);
  for (const auto& d : output.draws) {
    const auto theta = relabel_coordinates(d, one);
    for (std::size_t k = 0; k < g; ++k) mean[k] += theta[k];
  }
  std::vector<std::size_t> rank(g);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return mean[a] < mean[b]; });
  // rank[r] is the component that ends up in position r.
  Permutation perm(g);
  for (std::size_t r = 0; r < g; ++r) perm[rank[r]] = r;
  for (auto& d : out.draws) d = apply_permutation(d, perm);
  if (applied) *applied = perm;
  return out;
}

}  // namespace marbayes
