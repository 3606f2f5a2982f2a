#include "ddrf/leaf_model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ddrf {

LabelDistribution generate_label_distribution(double target,
                                              std::span<const double> labels,
                                              double std_dev) {
  if (labels.empty()) {
    throw std::invalid_argument("label set must not be empty");
  }
  if (std_dev < 0.0 || !std::isfinite(std_dev) || !std::isfinite(target)) {
    throw std::invalid_argument("label distribution needs finite target and std_dev >= 0");
  }
  for (std::size_t c = 1; c < labels.size(); ++c) {
    if (!(labels[c] > labels[c - 1])) {
      throw std::invalid_argument("label set must be strictly increasing");
    }
  }

  LabelDistribution dist(labels.size(), 0.0);
  if (std_dev == 0.0) {
    // Degenerate limit: one-hot at the nearest label, ties to the smaller.
    std::size_t best = 0;
    double best_distance = std::abs(labels[0] - target);
    for (std::size_t c = 1; c < labels.size(); ++c) {
      const double d = std::abs(labels[c] - target);
      if (d < best_distance) {
        best_distance = d;
        best = c;
      }
    }
    dist[best] = 1.0;
    return dist;
  }

  // Shift by the squared distance minimum so the exponentials are stable;
  // the constant cancels in the normalization.
  double min_sq = std::numeric_limits<double>::infinity();
  for (double label : labels) {
    min_sq = std::min(min_sq, (label - target) * (label - target));
  }
  double total = 0.0;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    const double sq = (labels[c] - target) * (labels[c] - target);
    dist[c] = std::exp(-(sq - min_sq) / (2.0 * std_dev * std_dev));
    total += dist[c];
  }
  for (double& v : dist) v /= total;
  return dist;
}

double gaussian_density(const GaussianLeaf& leaf, double y) {
  return std::exp(gaussian_log_density(leaf, y));
}

double gaussian_log_density(const GaussianLeaf& leaf, double y) {
  const double diff = y - leaf.mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * leaf.variance) -
         diff * diff / (2.0 * leaf.variance);
}

LabelDistribution tree_output_ldl(const RoutingResult& routing,
                                  std::span<const CategoricalLeaf> leaves) {
  if (leaves.size() != routing.leaf_probs.size()) {
    throw std::invalid_argument("leaf array size " + std::to_string(leaves.size()) +
                                " does not match routing leaf count " +
                                std::to_string(routing.leaf_probs.size()));
  }
  const std::size_t class_count = leaves.empty() ? 0 : leaves[0].probs.size();
  LabelDistribution out(class_count, 0.0);
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    if (leaves[l].probs.size() != class_count) {
      throw std::invalid_argument("inconsistent class count across leaves");
    }
    const double p = routing.leaf_probs[l];
    for (std::size_t c = 0; c < class_count; ++c) {
      out[c] += p * leaves[l].probs[c];
    }
  }
  return out;
}

double tree_density_regression(const RoutingResult& routing,
                               std::span<const GaussianLeaf> leaves, double y) {
  if (leaves.size() != routing.leaf_probs.size()) {
    throw std::invalid_argument("leaf array size " + std::to_string(leaves.size()) +
                                " does not match routing leaf count " +
                                std::to_string(routing.leaf_probs.size()));
  }
  double density = 0.0;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    density += routing.leaf_probs[l] * gaussian_density(leaves[l], y);
  }
  return density;
}

}  // namespace ddrf
