#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "ddrf/feature_learner.hpp"
#include "oracles.hpp"

using namespace ddrf;

namespace {

LearnerSpec linear_spec(int in, int out, std::uint64_t seed = 0) {
  LearnerSpec spec;
  spec.kind = LearnerKind::linear;
  spec.input_dim = in;
  spec.output_dim = out;
  spec.seed = seed;
  return spec;
}

LearnerSpec mlp_spec(int in, std::vector<int> hidden, int out, ActivationKind activation,
                     std::uint64_t seed) {
  LearnerSpec spec;
  spec.kind = LearnerKind::mlp;
  spec.input_dim = in;
  spec.output_dim = out;
  spec.hidden = std::move(hidden);
  spec.activation = activation;
  spec.seed = seed;
  return spec;
}

// Plain-loop re-implementation of the forward pass from the layout.
std::vector<double> reference_forward(const FeatureLearner& learner,
                                      const std::vector<double>& input) {
  std::vector<double> current = input;
  const auto& layers = learner.layout();
  const std::span<const double> params = learner.parameters();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    std::vector<double> next(static_cast<std::size_t>(layers[k].output_dim));
    for (int o = 0; o < layers[k].output_dim; ++o) {
      double z = params[layers[k].bias_offset + static_cast<std::size_t>(o)];
      for (int in = 0; in < layers[k].input_dim; ++in) {
        z += params[layers[k].weight_offset +
                    static_cast<std::size_t>(o) * layers[k].input_dim +
                    static_cast<std::size_t>(in)] *
             current[static_cast<std::size_t>(in)];
      }
      if (k + 1 < layers.size()) {
        z = learner.spec().activation == ActivationKind::tanh ? std::tanh(z)
                                                              : std::max(z, 0.0);
      }
      next[static_cast<std::size_t>(o)] = z;
    }
    current = std::move(next);
  }
  return current;
}

}  // namespace

TEST_CASE("linear learner forward") {
  SUBCASE("identity weights pass the input through") {
    FeatureLearner learner(linear_spec(3, 3));
    std::vector<double>& params = learner.mutable_parameters();
    std::fill(params.begin(), params.end(), 0.0);
    for (int i = 0; i < 3; ++i) params[static_cast<std::size_t>(i * 3 + i)] = 1.0;
    const std::vector<double> input = {0.3, -1.2, 4.0};
    const std::vector<double> output = learner.forward(input);
    for (std::size_t i = 0; i < 3; ++i) CHECK(output[i] == input[i]);
  }
  SUBCASE("zero weights return the bias") {
    FeatureLearner learner(linear_spec(2, 2));
    std::vector<double>& params = learner.mutable_parameters();
    std::fill(params.begin(), params.end(), 0.0);
    const LayerLayout& layer = learner.layout()[0];
    params[layer.bias_offset] = 2.5;
    params[layer.bias_offset + 1] = -1.0;
    const std::vector<double> output = learner.forward(std::vector<double>{9.0, 9.0});
    CHECK(output[0] == 2.5);
    CHECK(output[1] == -1.0);
  }
  SUBCASE("dimension mismatch") {
    FeatureLearner learner(linear_spec(3, 2));
    CHECK_THROWS_AS(learner.forward(std::vector<double>{1.0, 2.0}), std::invalid_argument);
  }
}

TEST_CASE("mlp forward matches an independent re-implementation") {
  const FeatureLearner learner(mlp_spec(2, {4}, 3, ActivationKind::tanh, 42));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<double> input = {dist(rng), dist(rng)};
    const std::vector<double> fast = learner.forward(input);
    const std::vector<double> reference = reference_forward(learner, input);
    for (std::size_t o = 0; o < fast.size(); ++o) {
      CHECK(fast[o] == doctest::Approx(reference[o]).epsilon(1e-12));
    }
  }
}

TEST_CASE("initialization") {
  SUBCASE("deterministic per seed") {
    const FeatureLearner a(mlp_spec(3, {5}, 4, ActivationKind::relu, 7));
    const FeatureLearner b(mlp_spec(3, {5}, 4, ActivationKind::relu, 7));
    REQUIRE(a.parameter_count() == b.parameter_count());
    for (std::size_t i = 0; i < a.parameter_count(); ++i) {
      CHECK(a.parameters()[i] == b.parameters()[i]);
    }
  }
  SUBCASE("weights bounded, biases zero") {
    const FeatureLearner learner(mlp_spec(6, {8}, 4, ActivationKind::tanh, 3));
    for (const LayerLayout& layer : learner.layout()) {
      const double bound = std::sqrt(6.0 / (layer.input_dim + layer.output_dim));
      for (int o = 0; o < layer.output_dim; ++o) {
        CHECK(learner.parameters()[layer.bias_offset + static_cast<std::size_t>(o)] == 0.0);
        for (int in = 0; in < layer.input_dim; ++in) {
          const double w = learner.parameters()[layer.weight_offset +
                                                static_cast<std::size_t>(o) * layer.input_dim +
                                                static_cast<std::size_t>(in)];
          CHECK(std::abs(w) <= bound);
        }
      }
    }
  }
  SUBCASE("bad specs are rejected") {
    CHECK_THROWS_AS(FeatureLearner(linear_spec(0, 3)), std::invalid_argument);
    LearnerSpec with_hidden = linear_spec(2, 3);
    with_hidden.hidden = {4};
    CHECK_THROWS_AS(FeatureLearner{with_hidden}, std::invalid_argument);
    CHECK_THROWS_AS(FeatureLearner(mlp_spec(2, {0}, 3, ActivationKind::tanh, 0)),
                    std::invalid_argument);
  }
}

TEST_CASE("linear backward is the outer product") {
  FeatureLearner learner(linear_spec(3, 2));
  const std::vector<double> input = {1.0, -2.0, 0.5};
  const std::vector<double> upstream = {0.7, -0.3};
  std::vector<double> gradient(learner.parameter_count(), 0.0);
  learner.backward(input, upstream, gradient);

  const LayerLayout& layer = learner.layout()[0];
  for (int o = 0; o < 2; ++o) {
    for (int in = 0; in < 3; ++in) {
      CHECK(gradient[layer.weight_offset + static_cast<std::size_t>(o * 3 + in)] ==
            upstream[static_cast<std::size_t>(o)] * input[static_cast<std::size_t>(in)]);
    }
    CHECK(gradient[layer.bias_offset + static_cast<std::size_t>(o)] ==
          upstream[static_cast<std::size_t>(o)]);
  }
}

TEST_CASE("zero upstream gives zero gradient") {
  const FeatureLearner learner(mlp_spec(3, {4}, 2, ActivationKind::tanh, 11));
  std::vector<double> gradient(learner.parameter_count(), 0.0);
  learner.backward(std::vector<double>{1.0, 2.0, 3.0}, std::vector<double>{0.0, 0.0}, gradient);
  for (double g : gradient) CHECK(g == 0.0);
}

TEST_CASE("mlp backward matches finite differences of a probe") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (ActivationKind activation : {ActivationKind::tanh, ActivationKind::relu}) {
    const FeatureLearner learner(mlp_spec(3, {5, 4}, 3, activation, 19));
    const std::vector<double> input = {dist(rng), dist(rng), dist(rng)};
    const std::vector<double> probe_weights = {dist(rng), dist(rng), dist(rng)};

    std::vector<double> analytic(learner.parameter_count(), 0.0);
    learner.backward(input, probe_weights, analytic);

    const LearnerSpec spec = learner.spec();
    const std::vector<double> point(learner.parameters().begin(), learner.parameters().end());
    const std::vector<double> fd = oracle::central_differences(
        point,
        [&](const std::vector<double>& params) {
          const FeatureLearner probe(spec, params);
          const std::vector<double> f = probe.forward(input);
          double value = 0.0;
          for (std::size_t o = 0; o < f.size(); ++o) value += probe_weights[o] * f[o];
          return value;
        },
        1e-4);
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const double scale = std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-3});
      CHECK(std::abs(analytic[i] - fd[i]) / scale < 1e-5);
    }
  }
}

TEST_CASE("sgd_step") {
  SUBCASE("zero learning rate is a no-op") {
    std::vector<double> params = {1.0, -2.0};
    const std::vector<double> gradient = {5.0, 5.0};
    sgd_step(params, gradient, 0.0);
    CHECK(params[0] == 1.0);
    CHECK(params[1] == -2.0);
  }
  SUBCASE("one step on a quadratic") {
    std::vector<double> params = {1.0};
    const std::vector<double> gradient = {1.0};  // d/dx of x^2/2 at 1
    sgd_step(params, gradient, 0.1);
    CHECK(params[0] == doctest::Approx(0.9).epsilon(1e-15));
  }
  SUBCASE("length mismatch") {
    std::vector<double> params = {1.0};
    const std::vector<double> gradient = {1.0, 2.0};
    CHECK_THROWS_AS(sgd_step(params, gradient, 0.1), std::invalid_argument);
  }
}

TEST_CASE("scheduled_learning_rate halves on schedule") {
  CHECK(scheduled_learning_rate(0.05, 0, 10000) == 0.05);
  CHECK(scheduled_learning_rate(0.05, 9999, 10000) == 0.05);
  CHECK(scheduled_learning_rate(0.05, 10000, 10000) == 0.025);
  CHECK(scheduled_learning_rate(0.05, 20000, 10000) == 0.0125);
  CHECK(scheduled_learning_rate(0.05, 29999, 10000) == 0.0125);
  CHECK(scheduled_learning_rate(0.05, 500, 0) == 0.05);
}

TEST_CASE("kind parsing round-trips") {
  CHECK(parse_learner_kind("linear") == LearnerKind::linear);
  CHECK(parse_learner_kind("mlp") == LearnerKind::mlp);
  CHECK_THROWS_AS(parse_learner_kind("cnn"), std::invalid_argument);
  CHECK(parse_activation_kind(to_string(ActivationKind::relu)) == ActivationKind::relu);
  CHECK(parse_activation_kind(to_string(ActivationKind::tanh)) == ActivationKind::tanh);
}
