#pragma once

#include <cstdint>
#include <span>

#include "ddrf/dataset.hpp"
#include "ddrf/feature_learner.hpp"
#include "ddrf/metrics.hpp"

namespace ddrf {

/// Squared-loss comparison model: the same feature learner topped by a
/// scalar linear readout instead of the forest.
struct BaselineConfig {
  LearnerKind learner_kind = LearnerKind::linear;
  std::vector<int> hidden;
  ActivationKind activation = ActivationKind::tanh;
  int feature_dim = 128;
  int batch_size = 16;
  int max_iterations = 30000;
  double learning_rate = 0.05;
  int lr_halve_every = 10000;
  std::uint64_t param_seed = 1;
  std::uint64_t batch_seed = 3;
};

class BaselineModel {
 public:
  BaselineModel(FeatureLearner learner, std::vector<double> readout, double bias);

  double predict(std::span<const double> input) const;
  const FeatureLearner& learner() const { return learner_; }

 private:
  FeatureLearner learner_;
  std::vector<double> readout_;
  double bias_;
};

BaselineModel train_l2_baseline(const Dataset& train, const BaselineConfig& config);

/// Trains on `train`, evaluates MAE/CS on `test`.
EvalReport baseline_l2_regression(const Dataset& train, const Dataset& test,
                                  const BaselineConfig& config);

}  // namespace ddrf
