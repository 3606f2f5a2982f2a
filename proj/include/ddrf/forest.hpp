#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ddrf/dataset.hpp"
#include "ddrf/feature_learner.hpp"
#include "ddrf/leaf_model.hpp"
#include "ddrf/split_grad.hpp"
#include "ddrf/tree.hpp"

namespace ddrf {

enum class HeadKind { ldl, regression, classification };
enum class LdlDecode { argmax, expectation };

HeadKind parse_head_kind(const std::string& name);
std::string to_string(HeadKind head);

/// All training hyper-parameters. Defaults follow the reference setting:
/// 5 trees of depth 6, 128 feature units, leaf update every 50 mini-batches
/// of 16 with 20 inner iterations, lr 0.05 halved every 10k of 30k steps,
/// label std 2.0, T0 = 1, tau0 = 0.5, eta = 0.9.
struct TrainConfig {
  int tree_count = 5;
  int depth = 6;
  int feature_dim = 128;            // output units of the feature learner
  int batches_per_leaf_update = 50; // n_B
  int batch_size = 16;
  int max_iterations = 30000;
  double learning_rate = 0.05;
  int lr_halve_every = 10000;
  double label_std = 2.0;           // target-distribution spread (ldl head)
  double initial_temperature = 1.0; // split-annealing T0
  double initial_tau = 0.5;         // leaf-annealing tau0 (regression head)
  double cooling = 0.9;             // eta, shared by both schedules
  int leaf_update_iterations = 20;
  double variance_floor = kDefaultVarianceFloor;
  LearnerKind learner_kind = LearnerKind::linear;
  std::vector<int> hidden;
  ActivationKind activation = ActivationKind::tanh;
  std::uint64_t param_seed = 1;
  std::uint64_t assignment_seed = 2;
  std::uint64_t batch_seed = 3;
  std::uint64_t leaf_seed = 4;
  // Alternating per-tree ensemble training as in DNDF-style forests;
  // exposed for comparison configs but not implemented.
  bool dndf_ensemble = false;
};

/// One tree: fixed topology plus its own leaf parameters. Which leaf array
/// is populated depends on the forest head.
struct Tree {
  TreeTopology topology;
  std::vector<CategoricalLeaf> cat_leaves;
  std::vector<GaussianLeaf> gauss_leaves;
};

/// One row of the training log, written after every leaf-update round.
struct TrainRecord {
  int iteration = 0;
  double risk = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  double temperature = 0.0;
  double tau = 1.0;
};

struct ScheduleState {
  double temperature = 0.0;
  double tau = 1.0;
  int iteration = 0;
};

/// Ensemble of soft trees sharing one feature learner; each tree has its
/// own unit assignment and leaf parameters.
class Forest {
 public:
  Forest(HeadKind head, TrainConfig config, FeatureLearner learner, std::vector<Tree> trees,
         std::vector<double> labels);

  HeadKind head() const { return head_; }
  const TrainConfig& config() const { return config_; }
  const FeatureLearner& learner() const { return learner_; }
  FeatureLearner& learner() { return learner_; }
  const std::vector<Tree>& trees() const { return trees_; }
  std::vector<Tree>& trees() { return trees_; }
  const std::vector<double>& labels() const { return labels_; }
  const ScheduleState& schedule() const { return schedule_; }
  void set_schedule(const ScheduleState& state) { schedule_ = state; }

  /// Decoded prediction: mixture mean for regression, decoded label value
  /// for the discrete heads.
  double predict(std::span<const double> input, LdlDecode decode = LdlDecode::argmax) const;

  /// Averaged simplex over trees (discrete heads only).
  std::vector<double> predict_distribution(std::span<const double> input) const;

  void save(const std::filesystem::path& path) const;
  static Forest load(const std::filesystem::path& path);

 private:
  HeadKind head_;
  TrainConfig config_;
  FeatureLearner learner_;
  std::vector<Tree> trees_;
  std::vector<double> labels_;
  ScheduleState schedule_;
};

/// Forest loss: the mean of the per-tree annealed losses.
AnnealedLossValue forest_loss(const Forest& forest, const Dataset& data,
                              std::span<const int> indices, double temperature);

/// Gradient of the forest loss w.r.t. the feature-learner parameters:
/// per-tree split partials scattered through each tree's unit assignment,
/// averaged over trees, then pushed through the learner.
std::vector<double> forest_split_gradient(const Forest& forest, const Dataset& data,
                                          std::span<const int> indices, double temperature);

struct TrainResult {
  Forest forest;
  std::vector<TrainRecord> log;
};

/// Alternating optimization: mini-batch SGD on the split/learner parameters,
/// a closed-form leaf-update round every n_B batches on the buffered
/// routings, then one cooling (and, for regression, warming) tick.
TrainResult train(const Dataset& data, HeadKind head, const TrainConfig& config);

// Target plumbing shared with the harness.
std::vector<double> derive_labels(const Dataset& data, HeadKind head);
std::vector<LabelDistribution> make_ldl_targets(std::span<const double> targets,
                                                std::span<const double> labels, double label_std);
std::vector<int> make_class_targets(std::span<const double> targets,
                                    std::span<const double> labels);

}  // namespace ddrf
