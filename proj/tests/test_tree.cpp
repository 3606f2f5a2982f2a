#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <set>

#include "ddrf/tree.hpp"

using namespace ddrf;

namespace {

// logit(s) so that route() reproduces a wanted activation exactly.
double logit(double s) { return std::log(s / (1.0 - s)); }

TreeTopology identity_topology(int depth) {
  const int splits = (1 << (depth - 1)) - 1;
  std::vector<int> assignment(static_cast<std::size_t>(splits));
  for (int n = 0; n < splits; ++n) assignment[static_cast<std::size_t>(n)] = n;
  return TreeTopology(depth, assignment, std::max(splits, 1));
}

}  // namespace

TEST_CASE("split_activation basics") {
  CHECK(split_activation(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(split_activation(20.0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(split_activation(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(split_activation(5.0) > 0.0);
  CHECK(split_activation(5.0) < 1.0);
  CHECK_THROWS_AS(split_activation(std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(split_activation(std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("route on small trees") {
  SUBCASE("depth 2, uniform root split") {
    const TreeTopology topology = identity_topology(2);
    const double features[] = {0.0};
    const RoutingResult routing = route(topology, features);
    REQUIRE(routing.leaf_probs.size() == 2);
    CHECK(routing.leaf_probs[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(routing.leaf_probs[1] == doctest::Approx(0.5).epsilon(1e-15));
  }

  SUBCASE("depth 3 path products") {
    const TreeTopology topology = identity_topology(3);
    const double features[] = {logit(0.8), logit(0.6), logit(0.3)};
    const RoutingResult routing = route(topology, features);
    REQUIRE(routing.leaf_probs.size() == 4);
    CHECK(routing.leaf_probs[0] == doctest::Approx(0.48).epsilon(1e-12));
    CHECK(routing.leaf_probs[1] == doctest::Approx(0.32).epsilon(1e-12));
    CHECK(routing.leaf_probs[2] == doctest::Approx(0.06).epsilon(1e-12));
    CHECK(routing.leaf_probs[3] == doctest::Approx(0.14).epsilon(1e-12));
  }

  SUBCASE("saturated root sends nothing right") {
    const TreeTopology topology = identity_topology(3);
    const double features[] = {60.0, 0.0, 0.0};
    const RoutingResult routing = route(topology, features);
    CHECK(routing.leaf_probs[2] <= 1e-9);
    CHECK(routing.leaf_probs[3] <= 1e-9);
  }

  SUBCASE("feature vector too short") {
    const TreeTopology topology(2, {3}, 4);
    const double features[] = {0.0, 0.0};
    CHECK_THROWS_AS(route(topology, features), std::invalid_argument);
  }

  SUBCASE("single-leaf tree routes everything to its leaf") {
    const TreeTopology topology(1, {}, 1);
    const double features[] = {0.7};
    const RoutingResult routing = route(topology, features);
    REQUIRE(routing.leaf_probs.size() == 1);
    CHECK(routing.leaf_probs[0] == 1.0);
    CHECK(routing.split_activations.empty());
  }
}

TEST_CASE("route properties over random instances") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> feature_dist(-4.0, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int depth = 1 + static_cast<int>(rng() % 5);
    const int feature_dim = std::max((1 << (depth - 1)) - 1, 1) + static_cast<int>(rng() % 3);
    const TreeTopology topology = TreeTopology::sample(depth, feature_dim, rng);
    std::vector<double> features(static_cast<std::size_t>(feature_dim));
    for (double& f : features) f = feature_dist(rng);

    const RoutingResult routing = route(topology, features);
    double total = 0.0;
    for (double p : routing.leaf_probs) {
      CHECK(p >= 0.0);
      total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    // Pure function: identical inputs give bit-identical outputs.
    const RoutingResult again = route(topology, features);
    for (std::size_t l = 0; l < routing.leaf_probs.size(); ++l) {
      CHECK(routing.leaf_probs[l] == again.leaf_probs[l]);
    }
  }
}

TEST_CASE("topology sampling and validation") {
  std::mt19937_64 rng(5);
  SUBCASE("without replacement when units suffice") {
    const TreeTopology topology = TreeTopology::sample(4, 16, rng);
    std::set<int> unique(topology.index_assignment().begin(),
                         topology.index_assignment().end());
    CHECK(unique.size() == static_cast<std::size_t>(topology.split_count()));
  }
  SUBCASE("with replacement when units are scarce") {
    const TreeTopology topology = TreeTopology::sample(4, 3, rng);
    CHECK(topology.split_count() == 7);
    for (int unit : topology.index_assignment()) {
      CHECK(unit >= 0);
      CHECK(unit < 3);
    }
  }
  SUBCASE("depth bounds") {
    CHECK_THROWS_AS(TreeTopology(0, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(TreeTopology::sample(14, 1 << 13, rng), std::invalid_argument);
    CHECK_NOTHROW(TreeTopology::sample(13, 1 << 13, rng));
  }
  SUBCASE("assignment entries must address real units") {
    CHECK_THROWS_AS(TreeTopology(2, {5}, 4), std::invalid_argument);
    CHECK_THROWS_AS(TreeTopology(2, {0, 1}, 4), std::invalid_argument);
  }
}

TEST_CASE("bottom_up_accumulate") {
  const TreeTopology topology = identity_topology(3);
  SUBCASE("sums of subtrees") {
    const double leaves[] = {1.0, 2.0, 3.0, 4.0};
    const std::vector<double> nodes = bottom_up_accumulate(topology, leaves);
    REQUIRE(nodes.size() == 7);
    CHECK(nodes[0] == 10.0);
    CHECK(nodes[1] == 3.0);
    CHECK(nodes[2] == 7.0);
    CHECK(nodes[3] == 1.0);
    CHECK(nodes[6] == 4.0);
  }
  SUBCASE("zeros stay zeros") {
    const double leaves[] = {0.0, 0.0, 0.0, 0.0};
    for (double v : bottom_up_accumulate(topology, leaves)) CHECK(v == 0.0);
  }
  SUBCASE("routing probabilities sum to one at the root") {
    const double features[] = {0.3, -1.2, 0.9};
    const RoutingResult routing = route(topology, features);
    const std::vector<double> nodes = bottom_up_accumulate(topology, routing.leaf_probs);
    CHECK(nodes[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("parent equals sum of children exactly") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> leaves(4);
    for (double& v : leaves) v = dist(rng);
    const std::vector<double> nodes = bottom_up_accumulate(topology, leaves);
    for (int n = 0; n < topology.split_count(); ++n) {
      CHECK(nodes[static_cast<std::size_t>(n)] ==
            nodes[static_cast<std::size_t>(TreeTopology::left_child(n))] +
                nodes[static_cast<std::size_t>(TreeTopology::right_child(n))]);
    }
  }
  SUBCASE("length mismatch") {
    const double wrong[] = {1.0, 2.0};
    CHECK_THROWS_AS(bottom_up_accumulate(topology, wrong), std::invalid_argument);
  }
}

TEST_CASE("leaf_entropy_terms") {
  SUBCASE("two equal leaves") {
    RoutingResult routing;
    routing.leaf_probs = {0.5, 0.5};
    const std::vector<double> terms = leaf_entropy_terms(routing);
    CHECK(terms[0] == doctest::Approx(0.15342640972002736).epsilon(1e-12));
    CHECK(terms[0] + terms[1] == doctest::Approx(0.30685281944005471).epsilon(1e-12));
  }
  SUBCASE("zero-probability convention") {
    RoutingResult routing;
    routing.leaf_probs = {1.0, 0.0};
    const std::vector<double> terms = leaf_entropy_terms(routing);
    CHECK(terms[0] == 1.0);
    CHECK(terms[1] == 0.0);
  }
  SUBCASE("uniform routing maximizes entropy at log leaf count") {
    RoutingResult routing;
    routing.leaf_probs = {0.25, 0.25, 0.25, 0.25};
    const std::vector<double> terms = leaf_entropy_terms(routing);
    double sum = 0.0;
    for (double t : terms) sum += t;
    // H = 1 - sum of (P + P log P) terms.
    CHECK(1.0 - sum == doctest::Approx(1.3862943611198906).epsilon(1e-12));
  }
  SUBCASE("entropy of any routing lies in [0, log leaf count]") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    const TreeTopology topology = identity_topology(4);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<double> features(7);
      for (double& f : features) f = dist(rng);
      const RoutingResult routing = route(topology, features);
      const std::vector<double> terms = leaf_entropy_terms(routing);
      double sum = 0.0;
      for (double t : terms) sum += t;
      const double entropy = 1.0 - sum;
      CHECK(entropy >= -1e-12);
      CHECK(entropy <= std::log(8.0) + 1e-12);
    }
  }
}
