#pragma once

#include <span>
#include <string>
#include <vector>

#include "marbayes/sampler.hpp"

namespace marbayes {

enum class RelabelParam { weights, scales, means };

// Parses "weights", "scales" or "means"; throws std::invalid_argument.
RelabelParam parse_relabel_param(const std::string& name);
std::string to_string(RelabelParam p);

struct RelabelConfig {
  std::size_t m = 200;
  std::vector<RelabelParam> subset = {RelabelParam::weights, RelabelParam::scales};
  // Warn when a warm-start variance exceeds this multiple of the same
  // coordinate's variance over the relabelled chain.
  double warm_start_ratio = 1.25;

  void validate() const;
  std::size_t coordinates(std::size_t g) const { return subset.size() * g; }
};

struct ClusterCentres {
  std::vector<double> centre;
  std::vector<double> variance;
  std::size_t count = 0;
};

// perm[j] is the label that component j of a draw receives.
using Permutation = std::vector<std::size_t>;

// theta laid out block by block: the g values of subset[0], then subset[1], ...
std::vector<double> relabel_coordinates(const ChainState& draw, const RelabelConfig& config);

// Mean and 1/m variance of the first config.m draws. Throws
// std::invalid_argument if any coordinate has zero variance.
ClusterCentres init_centres(std::span<const ChainState> draws, const RelabelConfig& config);

double normalised_distance(std::span<const double> theta, const ClusterCentres& centres);

// Minimiser over all g! permutations; ties go to the lexicographically
// smallest permutation.
Permutation assign_permutation(const ChainState& draw, const ClusterCentres& centres,
                               const RelabelConfig& config);

// Moves every parameter block, mean and allocation label of component j to
// position perm[j].
ChainState apply_permutation(const ChainState& draw, const Permutation& perm);

// One step of the running mean/variance recursion; count becomes count + 1.
ClusterCentres update_centres(const ClusterCentres& centres, std::span<const double> theta);

// Online k-means relabelling. Draws 0..m-1 seed the centres and are left as
// they are. When `applied` is non-null it receives one permutation per draw.
ChainOutput relabel_chain(const ChainOutput& output, const RelabelConfig& config,
                          std::vector<Permutation>* applied = nullptr);

// Applies one permutation to every draw so that the chain means of `by` are
// increasing in the component index. Used to line up separate chains.
ChainOutput order_components(const ChainOutput& output, RelabelParam by,
                             Permutation* applied = nullptr);

}  // namespace marbayes
