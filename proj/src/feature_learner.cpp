#include "ddrf/feature_learner.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ddrf {

namespace {

std::vector<int> layer_sizes(const LearnerSpec& spec) {
  std::vector<int> sizes;
  sizes.push_back(spec.input_dim);
  if (spec.kind == LearnerKind::mlp) {
    for (int width : spec.hidden) sizes.push_back(width);
  }
  sizes.push_back(spec.output_dim);
  return sizes;
}

double activate(ActivationKind kind, double z) {
  return kind == ActivationKind::tanh ? std::tanh(z) : std::max(z, 0.0);
}

double activate_grad(ActivationKind kind, double a) {
  // tanh' expressed through the activation value; relu' through its sign.
  return kind == ActivationKind::tanh ? 1.0 - a * a : (a > 0.0 ? 1.0 : 0.0);
}

}  // namespace

FeatureLearner::FeatureLearner(LearnerSpec spec) : spec_(std::move(spec)) {
  if (spec_.input_dim <= 0 || spec_.output_dim <= 0) {
    throw std::invalid_argument("learner dimensions must be positive");
  }
  if (spec_.kind == LearnerKind::linear && !spec_.hidden.empty()) {
    throw std::invalid_argument("linear learner takes no hidden layers");
  }
  for (int width : spec_.hidden) {
    if (width <= 0) throw std::invalid_argument("hidden layer widths must be positive");
  }

  const std::vector<int> sizes = layer_sizes(spec_);
  std::size_t count = 0;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    LayerLayout layer;
    layer.input_dim = sizes[k];
    layer.output_dim = sizes[k + 1];
    layer.weight_offset = count;
    layer.bias_offset = count + static_cast<std::size_t>(layer.input_dim) * layer.output_dim;
    count = layer.bias_offset + static_cast<std::size_t>(layer.output_dim);
    layout_.push_back(layer);
  }
  parameters_.assign(count, 0.0);

  std::mt19937_64 rng(spec_.seed);
  for (const LayerLayout& layer : layout_) {
    const double bound = std::sqrt(6.0 / (layer.input_dim + layer.output_dim));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    const std::size_t weights = static_cast<std::size_t>(layer.input_dim) * layer.output_dim;
    for (std::size_t w = 0; w < weights; ++w) {
      parameters_[layer.weight_offset + w] = uniform(rng);
    }
  }
}

FeatureLearner::FeatureLearner(LearnerSpec spec, std::vector<double> parameters)
    : FeatureLearner(std::move(spec)) {
  if (parameters.size() != parameters_.size()) {
    throw std::invalid_argument("parameter vector length does not match learner layout");
  }
  parameters_ = std::move(parameters);
}

std::vector<double> FeatureLearner::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != spec_.input_dim) {
    throw std::invalid_argument("input dimension mismatch");
  }
  std::vector<double> current(input.begin(), input.end());
  for (std::size_t k = 0; k < layout_.size(); ++k) {
    const LayerLayout& layer = layout_[k];
    std::vector<double> next(static_cast<std::size_t>(layer.output_dim));
    for (int o = 0; o < layer.output_dim; ++o) {
      double z = parameters_[layer.bias_offset + static_cast<std::size_t>(o)];
      const std::size_t row = layer.weight_offset + static_cast<std::size_t>(o) * layer.input_dim;
      for (int in = 0; in < layer.input_dim; ++in) {
        z += parameters_[row + static_cast<std::size_t>(in)] * current[static_cast<std::size_t>(in)];
      }
      // Hidden layers are activated; the output layer stays linear.
      next[static_cast<std::size_t>(o)] =
          (k + 1 < layout_.size()) ? activate(spec_.activation, z) : z;
    }
    current = std::move(next);
  }
  return current;
}

void FeatureLearner::backward(std::span<const double> input, std::span<const double> upstream,
                              std::span<double> gradient) const {
  if (static_cast<int>(upstream.size()) != spec_.output_dim) {
    throw std::invalid_argument("upstream dimension mismatch");
  }
  if (gradient.size() != parameters_.size()) {
    throw std::invalid_argument("gradient buffer length does not match parameter count");
  }

  // Recompute per-layer activations for this sample.
  std::vector<std::vector<double>> activations;
  activations.emplace_back(input.begin(), input.end());
  for (std::size_t k = 0; k < layout_.size(); ++k) {
    const LayerLayout& layer = layout_[k];
    std::vector<double> next(static_cast<std::size_t>(layer.output_dim));
    for (int o = 0; o < layer.output_dim; ++o) {
      double z = parameters_[layer.bias_offset + static_cast<std::size_t>(o)];
      const std::size_t row = layer.weight_offset + static_cast<std::size_t>(o) * layer.input_dim;
      for (int in = 0; in < layer.input_dim; ++in) {
        z += parameters_[row + static_cast<std::size_t>(in)] *
             activations[k][static_cast<std::size_t>(in)];
      }
      next[static_cast<std::size_t>(o)] =
          (k + 1 < layout_.size()) ? activate(spec_.activation, z) : z;
    }
    activations.push_back(std::move(next));
  }

  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t k = layout_.size(); k-- > 0;) {
    const LayerLayout& layer = layout_[k];
    const std::vector<double>& layer_input = activations[k];
    std::vector<double> previous_delta(static_cast<std::size_t>(layer.input_dim), 0.0);
    for (int o = 0; o < layer.output_dim; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      const std::size_t row = layer.weight_offset + static_cast<std::size_t>(o) * layer.input_dim;
      gradient[layer.bias_offset + static_cast<std::size_t>(o)] += d;
      for (int in = 0; in < layer.input_dim; ++in) {
        gradient[row + static_cast<std::size_t>(in)] += d * layer_input[static_cast<std::size_t>(in)];
        previous_delta[static_cast<std::size_t>(in)] +=
            d * parameters_[row + static_cast<std::size_t>(in)];
      }
    }
    if (k > 0) {
      for (int in = 0; in < layer.input_dim; ++in) {
        previous_delta[static_cast<std::size_t>(in)] *=
            activate_grad(spec_.activation, layer_input[static_cast<std::size_t>(in)]);
      }
    }
    delta = std::move(previous_delta);
  }
}

void sgd_step(std::span<double> parameters, std::span<const double> gradient,
              double learning_rate) {
  if (parameters.size() != gradient.size()) {
    throw std::invalid_argument("parameter/gradient length mismatch");
  }
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    parameters[i] -= learning_rate * gradient[i];
  }
}

double scheduled_learning_rate(double base_rate, int iteration, int halve_every) {
  if (halve_every <= 0) return base_rate;
  return base_rate * std::pow(0.5, iteration / halve_every);
}

LearnerKind parse_learner_kind(const std::string& name) {
  if (name == "linear") return LearnerKind::linear;
  if (name == "mlp") return LearnerKind::mlp;
  throw std::invalid_argument("unknown learner kind '" + name + "'");
}

ActivationKind parse_activation_kind(const std::string& name) {
  if (name == "tanh") return ActivationKind::tanh;
  if (name == "relu") return ActivationKind::relu;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(LearnerKind kind) {
  return kind == LearnerKind::linear ? "linear" : "mlp";
}

std::string to_string(ActivationKind kind) {
  return kind == ActivationKind::tanh ? "tanh" : "relu";
}

}  // namespace ddrf
