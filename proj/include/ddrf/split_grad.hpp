#pragma once

#include <span>
#include <vector>

#include "ddrf/leaf_model.hpp"
#include "ddrf/tree.hpp"

namespace ddrf {

/// Annealed objective E = R - T*H.
struct AnnealedLossValue {
  double risk = 0.0;
  double entropy = 0.0;
  double temperature = 0.0;
  double total = 0.0;
};

inline AnnealedLossValue annealed_loss(double risk, double entropy, double temperature) {
  return AnnealedLossValue{risk, entropy, temperature, risk - temperature * entropy};
}

/// Partials of the annealed loss w.r.t. the feature-learner outputs,
/// one row per sample, one column per output unit. Units not referenced
/// by any split node stay zero; units shared by several split nodes
/// accumulate additively.
struct SplitGradient {
  int sample_count = 0;
  int feature_dim = 0;
  std::vector<double> values;  // row-major [sample][unit]

  double& at(int sample, int unit) {
    return values[static_cast<std::size_t>(sample) * feature_dim + unit];
  }
  double at(int sample, int unit) const {
    return values[static_cast<std::size_t>(sample) * feature_dim + unit];
  }
};

// Batch risks. Tree outputs/densities are clamped at kProbFloor before logs.
double ldl_risk(std::span<const RoutingResult> routings,
                std::span<const CategoricalLeaf> leaves,
                std::span<const LabelDistribution> targets);
double regression_risk(std::span<const RoutingResult> routings,
                       std::span<const GaussianLeaf> leaves,
                       std::span<const double> targets);
double classification_risk(std::span<const RoutingResult> routings,
                           std::span<const CategoricalLeaf> leaves,
                           std::span<const int> targets);

/// Mean Shannon entropy of the leaf-reaching distributions over the batch.
double routing_entropy(std::span<const RoutingResult> routings);

// Analytic split gradients: one bottom-up pass per sample over the
// per-leaf likelihood-ratio terms and the entropy summands.
SplitGradient ldl_split_gradient(const TreeTopology& topology,
                                 std::span<const CategoricalLeaf> leaves,
                                 std::span<const RoutingResult> routings,
                                 std::span<const LabelDistribution> targets,
                                 double temperature);
SplitGradient regression_split_gradient(const TreeTopology& topology,
                                        std::span<const GaussianLeaf> leaves,
                                        std::span<const RoutingResult> routings,
                                        std::span<const double> targets,
                                        double temperature);
SplitGradient classification_split_gradient(const TreeTopology& topology,
                                            std::span<const CategoricalLeaf> leaves,
                                            std::span<const RoutingResult> routings,
                                            std::span<const int> targets,
                                            double temperature);

/// Geometric cooling step for the split-node annealing temperature.
double cool_split_temperature(double temperature, double eta);

}  // namespace ddrf
