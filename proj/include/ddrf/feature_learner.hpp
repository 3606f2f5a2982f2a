#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ddrf {

enum class LearnerKind { linear, mlp };
enum class ActivationKind { tanh, relu };

/// Shape of the differentiable feature map f(x) -> R^M feeding the split
/// nodes. Any differentiable map fits behind this contract; linear and
/// small MLP learners ship here.
struct LearnerSpec {
  LearnerKind kind = LearnerKind::linear;
  int input_dim = 0;
  int output_dim = 0;
  std::vector<int> hidden;  // mlp only
  ActivationKind activation = ActivationKind::tanh;
  std::uint64_t seed = 0;
};

/// Offsets of one layer's weights/biases inside the flat parameter vector.
/// Weights are row-major [out][in], followed by the bias.
struct LayerLayout {
  int input_dim = 0;
  int output_dim = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

class FeatureLearner {
 public:
  /// Seeded initialization: weights uniform in +-sqrt(6/(fan_in+fan_out)),
  /// biases zero.
  explicit FeatureLearner(LearnerSpec spec);
  FeatureLearner(LearnerSpec spec, std::vector<double> parameters);

  const LearnerSpec& spec() const { return spec_; }
  const std::vector<LayerLayout>& layout() const { return layout_; }
  std::size_t parameter_count() const { return parameters_.size(); }
  std::span<const double> parameters() const { return parameters_; }
  std::vector<double>& mutable_parameters() { return parameters_; }

  /// Deterministic forward pass; linear kind returns Wx + b.
  std::vector<double> forward(std::span<const double> input) const;

  /// Accumulates dE/dtheta into `gradient` given dE/df for one sample.
  void backward(std::span<const double> input, std::span<const double> upstream,
                std::span<double> gradient) const;

 private:
  LearnerSpec spec_;
  std::vector<LayerLayout> layout_;
  std::vector<double> parameters_;
};

/// Plain SGD: theta <- theta - lr * g.
void sgd_step(std::span<double> parameters, std::span<const double> gradient,
              double learning_rate);

/// Step schedule: base rate halved every `halve_every` iterations
/// (halve_every <= 0 disables the decay).
double scheduled_learning_rate(double base_rate, int iteration, int halve_every);

LearnerKind parse_learner_kind(const std::string& name);
ActivationKind parse_activation_kind(const std::string& name);
std::string to_string(LearnerKind kind);
std::string to_string(ActivationKind kind);

}  // namespace ddrf
