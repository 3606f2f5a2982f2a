#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ddrf {

// Probabilities and densities are clamped here before logs and ratios.
inline constexpr double kProbFloor = 1e-12;

// Unit-count constraint M >= 2^(h-1) - 1 caps usable depth at 13.
inline constexpr int kMaxTreeDepth = 13;

/// Complete binary tree of soft split nodes. Split node j has children
/// 2j+1 and 2j+2; node indices >= split_count() are leaves. Each split
/// node is wired to one output unit of the feature learner by a fixed
/// random assignment.
class TreeTopology {
 public:
  TreeTopology(int depth, std::vector<int> index_assignment, int feature_dim);

  /// Draws the split-node/feature-unit assignment from `rng`: without
  /// replacement when the learner has enough units, with replacement
  /// otherwise.
  static TreeTopology sample(int depth, int feature_dim, std::mt19937_64& rng);

  int depth() const { return depth_; }
  int split_count() const { return split_count_; }
  int leaf_count() const { return split_count_ + 1; }
  int node_count() const { return 2 * split_count_ + 1; }
  int feature_dim() const { return feature_dim_; }

  int feature_index(int split_node) const { return index_assignment_[static_cast<std::size_t>(split_node)]; }
  const std::vector<int>& index_assignment() const { return index_assignment_; }

  static int left_child(int node) { return 2 * node + 1; }
  static int right_child(int node) { return 2 * node + 2; }
  bool is_leaf(int node) const { return node >= split_count_; }
  int leaf_offset(int node) const { return node - split_count_; }

 private:
  int depth_;
  int split_count_;
  int feature_dim_;
  std::vector<int> index_assignment_;
};

/// Per-sample routing state: sigmoid activation of every split node plus
/// the leaf-reaching probabilities (root-to-leaf path products).
struct RoutingResult {
  std::vector<double> split_activations;
  std::vector<double> leaf_probs;
};

/// Sigmoid split function. Throws std::invalid_argument on non-finite input.
double split_activation(double feature_output);

/// Routes one feature vector through the tree. leaf_probs sum to 1;
/// activations are cached for gradient reuse.
RoutingResult route(const TreeTopology& topology, std::span<const double> features);

/// Sums one value per leaf over every subtree in a single bottom-up pass.
/// Returns a node-indexed vector (splits first, then leaves); each split
/// node holds the sum of its children.
std::vector<double> bottom_up_accumulate(const TreeTopology& topology,
                                         std::span<const double> per_leaf_values);

/// Per-leaf entropy summands P + P*log(P), with 0*log(0) = 0. Feeding the
/// result into bottom_up_accumulate yields the per-node entropy terms used
/// by the annealed split gradients.
std::vector<double> leaf_entropy_terms(const RoutingResult& routing);

}  // namespace ddrf
