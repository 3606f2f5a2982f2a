#include "ddrf/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ddrf {

namespace {

// Activations are kept away from {0,1} so path products stay positive.
double clamp_activation(double s) {
  return std::clamp(s, kProbFloor, 1.0 - kProbFloor);
}

}  // namespace

TreeTopology::TreeTopology(int depth, std::vector<int> index_assignment, int feature_dim)
    : depth_(depth), feature_dim_(feature_dim), index_assignment_(std::move(index_assignment)) {
  if (depth < 1 || depth > kMaxTreeDepth) {
    throw std::invalid_argument("tree depth must be in [1, " + std::to_string(kMaxTreeDepth) +
                                "], got " + std::to_string(depth));
  }
  split_count_ = (1 << (depth - 1)) - 1;
  if (static_cast<int>(index_assignment_.size()) != split_count_) {
    throw std::invalid_argument("index assignment size " + std::to_string(index_assignment_.size()) +
                                " does not match split count " + std::to_string(split_count_));
  }
  for (int unit : index_assignment_) {
    if (unit < 0 || unit >= feature_dim_) {
      throw std::invalid_argument("index assignment entry " + std::to_string(unit) +
                                  " outside feature dimension " + std::to_string(feature_dim_));
    }
  }
}

TreeTopology TreeTopology::sample(int depth, int feature_dim, std::mt19937_64& rng) {
  if (depth < 1 || depth > kMaxTreeDepth) {
    throw std::invalid_argument("tree depth must be in [1, " + std::to_string(kMaxTreeDepth) + "]");
  }
  const int splits = (1 << (depth - 1)) - 1;
  std::vector<int> assignment;
  assignment.reserve(static_cast<std::size_t>(splits));
  if (feature_dim >= splits) {
    std::vector<int> pool(static_cast<std::size_t>(feature_dim));
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    assignment.assign(pool.begin(), pool.begin() + splits);
  } else {
    std::uniform_int_distribution<int> pick(0, feature_dim - 1);
    for (int n = 0; n < splits; ++n) assignment.push_back(pick(rng));
  }
  return TreeTopology(depth, std::move(assignment), feature_dim);
}

double split_activation(double feature_output) {
  if (!std::isfinite(feature_output)) {
    throw std::invalid_argument("split activation requires a finite feature output");
  }
  return 1.0 / (1.0 + std::exp(-feature_output));
}

RoutingResult route(const TreeTopology& topology, std::span<const double> features) {
  for (int unit : topology.index_assignment()) {
    if (unit >= static_cast<int>(features.size())) {
      throw std::invalid_argument("feature vector of length " + std::to_string(features.size()) +
                                  " too short for assigned unit " + std::to_string(unit));
    }
  }

  RoutingResult result;
  const int splits = topology.split_count();
  result.split_activations.resize(static_cast<std::size_t>(splits));

  // path_prob[j] = probability of reaching node j; s routes left, 1-s right.
  std::vector<double> path_prob(static_cast<std::size_t>(topology.node_count()), 0.0);
  path_prob[0] = 1.0;
  for (int n = 0; n < splits; ++n) {
    const double s = clamp_activation(split_activation(features[static_cast<std::size_t>(topology.feature_index(n))]));
    result.split_activations[static_cast<std::size_t>(n)] = s;
    const double reach = path_prob[static_cast<std::size_t>(n)];
    path_prob[static_cast<std::size_t>(TreeTopology::left_child(n))] = reach * s;
    path_prob[static_cast<std::size_t>(TreeTopology::right_child(n))] = reach * (1.0 - s);
  }
  result.leaf_probs.assign(path_prob.begin() + splits, path_prob.end());
  return result;
}

std::vector<double> bottom_up_accumulate(const TreeTopology& topology,
                                         std::span<const double> per_leaf_values) {
  if (static_cast<int>(per_leaf_values.size()) != topology.leaf_count()) {
    throw std::invalid_argument("expected one value per leaf (" + std::to_string(topology.leaf_count()) +
                                "), got " + std::to_string(per_leaf_values.size()));
  }
  std::vector<double> node_values(static_cast<std::size_t>(topology.node_count()));
  std::copy(per_leaf_values.begin(), per_leaf_values.end(),
            node_values.begin() + topology.split_count());
  for (int n = topology.split_count() - 1; n >= 0; --n) {
    node_values[static_cast<std::size_t>(n)] =
        node_values[static_cast<std::size_t>(TreeTopology::left_child(n))] +
        node_values[static_cast<std::size_t>(TreeTopology::right_child(n))];
  }
  return node_values;
}

std::vector<double> leaf_entropy_terms(const RoutingResult& routing) {
  std::vector<double> terms(routing.leaf_probs.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double p = routing.leaf_probs[i];
    terms[i] = p > 0.0 ? p + p * std::log(p) : 0.0;
  }
  return terms;
}

}  // namespace ddrf
