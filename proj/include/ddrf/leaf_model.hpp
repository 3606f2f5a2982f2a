#pragma once

#include <span>
#include <vector>

#include "ddrf/tree.hpp"

namespace ddrf {

inline constexpr double kDefaultVarianceFloor = 1e-4;

/// Discrete distribution over an ordered label set (simplex).
using LabelDistribution = std::vector<double>;

/// Leaf prediction for the label-distribution and classification heads.
struct CategoricalLeaf {
  std::vector<double> probs;
};

/// Leaf prediction for the regression head. Targets are 1-D, so the
/// variance is a scalar, kept at or above a configurable floor.
struct GaussianLeaf {
  double mean = 0.0;
  double variance = 1.0;
};

/// Discretized Gaussian target distribution centered at `target` over the
/// ordered label values, normalized to the simplex. std_dev == 0 yields a
/// one-hot at the nearest label (ties go to the smaller label).
LabelDistribution generate_label_distribution(double target,
                                              std::span<const double> labels,
                                              double std_dev);

double gaussian_density(const GaussianLeaf& leaf, double y);
double gaussian_log_density(const GaussianLeaf& leaf, double y);

/// Tree output for the label-distribution head: the routing-weighted convex
/// combination of leaf simplices.
LabelDistribution tree_output_ldl(const RoutingResult& routing,
                                  std::span<const CategoricalLeaf> leaves);

/// Mixture density of the regression tree at target value y.
double tree_density_regression(const RoutingResult& routing,
                               std::span<const GaussianLeaf> leaves, double y);

}  // namespace ddrf
