#include "ddrf/split_grad.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ddrf {

namespace {

void check_batch(std::size_t routings, std::size_t targets) {
  if (routings != targets) {
    throw std::invalid_argument("batch size mismatch: " + std::to_string(routings) +
                                " routings vs " + std::to_string(targets) + " targets");
  }
}

// All heads share one gradient structure; only the per-leaf likelihood-ratio
// summand differs. `leaf_ratio` holds that summand per leaf; both it and the
// entropy summands are folded to all nodes in one bottom-up pass.
void accumulate_split_partials(const TreeTopology& topology,
                               const RoutingResult& routing,
                               std::span<const double> leaf_ratio,
                               double temperature, double inv_batch,
                               int sample, SplitGradient& grad) {
  const std::vector<double> ratio_nodes = bottom_up_accumulate(topology, leaf_ratio);
  const std::vector<double> entropy_nodes =
      bottom_up_accumulate(topology, leaf_entropy_terms(routing));
  for (int n = 0; n < topology.split_count(); ++n) {
    const double s = routing.split_activations[static_cast<std::size_t>(n)];
    const int left = TreeTopology::left_child(n);
    const int right = TreeTopology::right_child(n);
    const double right_term = ratio_nodes[static_cast<std::size_t>(right)] -
                              temperature * entropy_nodes[static_cast<std::size_t>(right)];
    const double left_term = ratio_nodes[static_cast<std::size_t>(left)] -
                             temperature * entropy_nodes[static_cast<std::size_t>(left)];
    grad.at(sample, topology.feature_index(n)) +=
        inv_batch * (s * right_term - (1.0 - s) * left_term);
  }
}

}  // namespace

double ldl_risk(std::span<const RoutingResult> routings,
                std::span<const CategoricalLeaf> leaves,
                std::span<const LabelDistribution> targets) {
  check_batch(routings.size(), targets.size());
  double risk = 0.0;
  for (std::size_t i = 0; i < routings.size(); ++i) {
    const LabelDistribution output = tree_output_ldl(routings[i], leaves);
    if (targets[i].size() != output.size()) {
      throw std::invalid_argument("target distribution size does not match leaf class count");
    }
    for (std::size_t c = 0; c < output.size(); ++c) {
      risk -= targets[i][c] * std::log(std::max(output[c], kProbFloor));
    }
  }
  return risk / static_cast<double>(routings.size());
}

double regression_risk(std::span<const RoutingResult> routings,
                       std::span<const GaussianLeaf> leaves,
                       std::span<const double> targets) {
  check_batch(routings.size(), targets.size());
  double risk = 0.0;
  for (std::size_t i = 0; i < routings.size(); ++i) {
    const double density = tree_density_regression(routings[i], leaves, targets[i]);
    risk -= std::log(std::max(density, kProbFloor));
  }
  return risk / static_cast<double>(routings.size());
}

double classification_risk(std::span<const RoutingResult> routings,
                           std::span<const CategoricalLeaf> leaves,
                           std::span<const int> targets) {
  check_batch(routings.size(), targets.size());
  double risk = 0.0;
  for (std::size_t i = 0; i < routings.size(); ++i) {
    double class_prob = 0.0;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      class_prob += routings[i].leaf_probs[l] *
                    leaves[l].probs[static_cast<std::size_t>(targets[i])];
    }
    risk -= std::log(std::max(class_prob, kProbFloor));
  }
  return risk / static_cast<double>(routings.size());
}

double routing_entropy(std::span<const RoutingResult> routings) {
  if (routings.empty()) return 0.0;
  double entropy = 0.0;
  for (const RoutingResult& routing : routings) {
    for (double p : routing.leaf_probs) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
  }
  return entropy / static_cast<double>(routings.size());
}

SplitGradient ldl_split_gradient(const TreeTopology& topology,
                                 std::span<const CategoricalLeaf> leaves,
                                 std::span<const RoutingResult> routings,
                                 std::span<const LabelDistribution> targets,
                                 double temperature) {
  check_batch(routings.size(), targets.size());
  const int batch = static_cast<int>(routings.size());
  SplitGradient grad{batch, topology.feature_dim(),
                     std::vector<double>(static_cast<std::size_t>(batch) * topology.feature_dim(), 0.0)};
  const double inv_batch = 1.0 / batch;
  std::vector<double> leaf_ratio(static_cast<std::size_t>(topology.leaf_count()));
  for (int i = 0; i < batch; ++i) {
    const RoutingResult& routing = routings[static_cast<std::size_t>(i)];
    const LabelDistribution output = tree_output_ldl(routing, leaves);
    const LabelDistribution& target = targets[static_cast<std::size_t>(i)];
    for (int l = 0; l < topology.leaf_count(); ++l) {
      double value = 0.0;
      for (std::size_t c = 0; c < output.size(); ++c) {
        value += target[c] * ((routing.leaf_probs[static_cast<std::size_t>(l)] *
                               leaves[static_cast<std::size_t>(l)].probs[c]) /
                              std::max(output[c], kProbFloor));
      }
      leaf_ratio[static_cast<std::size_t>(l)] = value;
    }
    accumulate_split_partials(topology, routing, leaf_ratio, temperature, inv_batch, i, grad);
  }
  return grad;
}

SplitGradient regression_split_gradient(const TreeTopology& topology,
                                        std::span<const GaussianLeaf> leaves,
                                        std::span<const RoutingResult> routings,
                                        std::span<const double> targets,
                                        double temperature) {
  check_batch(routings.size(), targets.size());
  const int batch = static_cast<int>(routings.size());
  SplitGradient grad{batch, topology.feature_dim(),
                     std::vector<double>(static_cast<std::size_t>(batch) * topology.feature_dim(), 0.0)};
  const double inv_batch = 1.0 / batch;
  std::vector<double> leaf_ratio(static_cast<std::size_t>(topology.leaf_count()));
  for (int i = 0; i < batch; ++i) {
    const RoutingResult& routing = routings[static_cast<std::size_t>(i)];
    const double y = targets[static_cast<std::size_t>(i)];
    const double density = std::max(tree_density_regression(routing, leaves, y), kProbFloor);
    for (int l = 0; l < topology.leaf_count(); ++l) {
      leaf_ratio[static_cast<std::size_t>(l)] =
          (routing.leaf_probs[static_cast<std::size_t>(l)] *
           gaussian_density(leaves[static_cast<std::size_t>(l)], y)) /
          density;
    }
    accumulate_split_partials(topology, routing, leaf_ratio, temperature, inv_batch, i, grad);
  }
  return grad;
}

SplitGradient classification_split_gradient(const TreeTopology& topology,
                                            std::span<const CategoricalLeaf> leaves,
                                            std::span<const RoutingResult> routings,
                                            std::span<const int> targets,
                                            double temperature) {
  check_batch(routings.size(), targets.size());
  const int batch = static_cast<int>(routings.size());
  SplitGradient grad{batch, topology.feature_dim(),
                     std::vector<double>(static_cast<std::size_t>(batch) * topology.feature_dim(), 0.0)};
  const double inv_batch = 1.0 / batch;
  std::vector<double> leaf_ratio(static_cast<std::size_t>(topology.leaf_count()));
  for (int i = 0; i < batch; ++i) {
    const RoutingResult& routing = routings[static_cast<std::size_t>(i)];
    const std::size_t y = static_cast<std::size_t>(targets[static_cast<std::size_t>(i)]);
    double class_prob = 0.0;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      class_prob += routing.leaf_probs[l] * leaves[l].probs[y];
    }
    class_prob = std::max(class_prob, kProbFloor);
    for (int l = 0; l < topology.leaf_count(); ++l) {
      leaf_ratio[static_cast<std::size_t>(l)] =
          (routing.leaf_probs[static_cast<std::size_t>(l)] *
           leaves[static_cast<std::size_t>(l)].probs[y]) /
          class_prob;
    }
    accumulate_split_partials(topology, routing, leaf_ratio, temperature, inv_batch, i, grad);
  }
  return grad;
}

double cool_split_temperature(double temperature, double eta) {
  if (temperature < 0.0 || eta < 0.0) {
    throw std::invalid_argument("temperature and cooling factor must be non-negative");
  }
  return eta * temperature;
}

}  // namespace ddrf
