#pragma once

#include <span>
#include <vector>

#include "ddrf/leaf_model.hpp"

namespace ddrf {

/// Per-sample, per-leaf responsibilities; each row sums to 1.
struct PosteriorMatrix {
  int sample_count = 0;
  int leaf_count = 0;
  std::vector<double> values;  // row-major [sample][leaf]

  double& at(int sample, int leaf) {
    return values[static_cast<std::size_t>(sample) * leaf_count + leaf];
  }
  double at(int sample, int leaf) const {
    return values[static_cast<std::size_t>(sample) * leaf_count + leaf];
  }
};

// Buffered statistics for one tree's leaf learning: the leaf-reaching
// probabilities cached while the split parameters were frozen, plus the
// matching targets. leaf_probs[i] has one entry per leaf.
struct LdlLeafBuffer {
  std::vector<std::vector<double>> leaf_probs;
  std::vector<LabelDistribution> targets;
};
struct RegressionLeafBuffer {
  std::vector<std::vector<double>> leaf_probs;
  std::vector<double> targets;
};
struct ClassificationLeafBuffer {
  std::vector<std::vector<double>> leaf_probs;
  std::vector<int> targets;
};

/// One closed-form bound-minimization step for label-distribution leaves.
/// Output rows stay on the simplex.
std::vector<CategoricalLeaf> ldl_leaf_update(const LdlLeafBuffer& buffer,
                                             const std::vector<CategoricalLeaf>& current);

/// One closed-form step for classification leaves; the one-hot special case
/// of the label-distribution update.
std::vector<CategoricalLeaf> classification_leaf_update(
    const ClassificationLeafBuffer& buffer, const std::vector<CategoricalLeaf>& current);

/// Tempered responsibilities: (P * density)^tau, row-normalized in log
/// domain. tau = 1 recovers the plain posterior; tau -> 0 flattens every
/// row toward uniform.
PosteriorMatrix tempered_posterior(const RegressionLeafBuffer& buffer,
                                   std::span<const GaussianLeaf> leaves, double tau);

/// One tempered bound-minimization step for Gaussian leaves: responsibility-
/// weighted mean, then biased variance about the new mean, floored. Leaves
/// with vanishing responsibility mass keep their previous parameters.
std::vector<GaussianLeaf> regression_leaf_update(const RegressionLeafBuffer& buffer,
                                                 const std::vector<GaussianLeaf>& current,
                                                 double tau,
                                                 double variance_floor = kDefaultVarianceFloor);

/// Warming step for the leaf annealing parameter: min(tau/eta, 1).
double warm_leaf_schedule(double tau, double eta);

// Jensen upper bound evaluated at (candidate, anchor). Equals the batch risk
// when candidate == anchor; never below the candidate's risk.
double vb_bound(const std::vector<CategoricalLeaf>& candidate,
                const std::vector<CategoricalLeaf>& anchor, const LdlLeafBuffer& buffer);
double vb_bound(const std::vector<CategoricalLeaf>& candidate,
                const std::vector<CategoricalLeaf>& anchor,
                const ClassificationLeafBuffer& buffer);
double vb_bound(const std::vector<GaussianLeaf>& candidate,
                const std::vector<GaussianLeaf>& anchor, const RegressionLeafBuffer& buffer);

// Batch risks evaluated on buffered routing probabilities.
double buffered_ldl_risk(const LdlLeafBuffer& buffer, const std::vector<CategoricalLeaf>& leaves);
double buffered_classification_risk(const ClassificationLeafBuffer& buffer,
                                    const std::vector<CategoricalLeaf>& leaves);
double buffered_regression_risk(const RegressionLeafBuffer& buffer,
                                const std::vector<GaussianLeaf>& leaves);

}  // namespace ddrf
