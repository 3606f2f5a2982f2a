#include "ddrf/baseline.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ddrf {

BaselineModel::BaselineModel(FeatureLearner learner, std::vector<double> readout, double bias)
    : learner_(std::move(learner)), readout_(std::move(readout)), bias_(bias) {
  if (readout_.size() != static_cast<std::size_t>(learner_.spec().output_dim)) {
    throw std::invalid_argument("readout size must match learner output dimension");
  }
}

double BaselineModel::predict(std::span<const double> input) const {
  const std::vector<double> f = learner_.forward(input);
  double value = bias_;
  for (std::size_t m = 0; m < readout_.size(); ++m) value += readout_[m] * f[m];
  return value;
}

BaselineModel train_l2_baseline(const Dataset& train, const BaselineConfig& config) {
  if (train.size() == 0) throw std::invalid_argument("training set is empty");

  LearnerSpec spec;
  spec.kind = config.learner_kind;
  spec.input_dim = train.feature_dim;
  spec.output_dim = config.feature_dim;
  spec.hidden = config.hidden;
  spec.activation = config.activation;
  spec.seed = config.param_seed;
  FeatureLearner learner(spec);

  std::mt19937_64 init_rng(config.param_seed + 1);
  const double bound = std::sqrt(6.0 / (config.feature_dim + 1));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  std::vector<double> readout(static_cast<std::size_t>(config.feature_dim));
  for (double& v : readout) v = uniform(init_rng);
  // Bias starts at the target mean so early updates fit structure, not offset.
  double bias = 0.0;
  for (double y : train.targets) bias += y;
  bias /= static_cast<double>(train.size());

  std::mt19937_64 batch_rng(config.batch_seed);
  std::uniform_int_distribution<int> pick(0, train.size() - 1);
  std::vector<double> learner_grad(learner.parameter_count());
  std::vector<double> readout_grad(readout.size());

  for (int iteration = 0; iteration < config.max_iterations; ++iteration) {
    std::fill(learner_grad.begin(), learner_grad.end(), 0.0);
    std::fill(readout_grad.begin(), readout_grad.end(), 0.0);
    double bias_grad = 0.0;

    for (int b = 0; b < config.batch_size; ++b) {
      const int index = pick(batch_rng);
      const std::span<const double> x = train.row(index);
      const std::vector<double> f = learner.forward(x);
      double prediction = bias;
      for (std::size_t m = 0; m < readout.size(); ++m) prediction += readout[m] * f[m];
      const double residual =
          (prediction - train.targets[static_cast<std::size_t>(index)]) / config.batch_size;

      std::vector<double> upstream(readout.size());
      for (std::size_t m = 0; m < readout.size(); ++m) {
        upstream[m] = residual * readout[m];
        readout_grad[m] += residual * f[m];
      }
      bias_grad += residual;
      learner.backward(x, upstream, learner_grad);
    }

    const double lr =
        scheduled_learning_rate(config.learning_rate, iteration, config.lr_halve_every);
    sgd_step(learner.mutable_parameters(), learner_grad, lr);
    sgd_step(readout, readout_grad, lr);
    bias -= lr * bias_grad;
    if (!std::isfinite(bias)) {
      throw std::runtime_error("baseline diverged at iteration " + std::to_string(iteration));
    }
  }

  return BaselineModel(std::move(learner), std::move(readout), bias);
}

EvalReport baseline_l2_regression(const Dataset& train, const Dataset& test,
                                  const BaselineConfig& config) {
  const BaselineModel model = train_l2_baseline(train, config);
  std::vector<double> predictions;
  predictions.reserve(static_cast<std::size_t>(test.size()));
  for (int i = 0; i < test.size(); ++i) {
    predictions.push_back(model.predict(test.row(i)));
  }
  return evaluate(predictions, test.targets);
}

}  // namespace ddrf
