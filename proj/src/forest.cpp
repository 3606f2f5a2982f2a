#include "ddrf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ddrf/leaf_update.hpp"

namespace ddrf {

namespace {

using nlohmann::json;

struct ForestForward {
  std::vector<std::vector<double>> feature_outputs;   // [sample][unit]
  std::vector<std::vector<RoutingResult>> routings;   // [tree][sample]
};

ForestForward forest_forward(const Forest& forest, const Dataset& data,
                             std::span<const int> indices) {
  ForestForward fwd;
  fwd.feature_outputs.reserve(indices.size());
  for (int index : indices) {
    fwd.feature_outputs.push_back(forest.learner().forward(data.row(index)));
    for (double f : fwd.feature_outputs.back()) {
      if (!std::isfinite(f)) {
        throw std::runtime_error("feature learner produced a non-finite output");
      }
    }
  }
  fwd.routings.resize(forest.trees().size());
  for (std::size_t k = 0; k < forest.trees().size(); ++k) {
    fwd.routings[k].reserve(indices.size());
    for (const std::vector<double>& f : fwd.feature_outputs) {
      fwd.routings[k].push_back(route(forest.trees()[k].topology, f));
    }
  }
  return fwd;
}

std::vector<double> gather_targets(const Dataset& data, std::span<const int> indices) {
  std::vector<double> targets;
  targets.reserve(indices.size());
  for (int index : indices) targets.push_back(data.targets[static_cast<std::size_t>(index)]);
  return targets;
}

double tree_risk(const Forest& forest, std::size_t tree, const ForestForward& fwd,
                 std::span<const double> targets,
                 const std::vector<LabelDistribution>& ldl_targets,
                 const std::vector<int>& class_targets) {
  const Tree& t = forest.trees()[tree];
  switch (forest.head()) {
    case HeadKind::ldl:
      return ldl_risk(fwd.routings[tree], t.cat_leaves, ldl_targets);
    case HeadKind::classification:
      return classification_risk(fwd.routings[tree], t.cat_leaves, class_targets);
    case HeadKind::regression:
      return regression_risk(fwd.routings[tree], t.gauss_leaves, targets);
  }
  throw std::logic_error("unreachable head");
}

SplitGradient tree_split_gradient(const Forest& forest, std::size_t tree,
                                  const ForestForward& fwd, std::span<const double> targets,
                                  const std::vector<LabelDistribution>& ldl_targets,
                                  const std::vector<int>& class_targets, double temperature) {
  const Tree& t = forest.trees()[tree];
  switch (forest.head()) {
    case HeadKind::ldl:
      return ldl_split_gradient(t.topology, t.cat_leaves, fwd.routings[tree], ldl_targets,
                                temperature);
    case HeadKind::classification:
      return classification_split_gradient(t.topology, t.cat_leaves, fwd.routings[tree],
                                           class_targets, temperature);
    case HeadKind::regression:
      return regression_split_gradient(t.topology, t.gauss_leaves, fwd.routings[tree], targets,
                                       temperature);
  }
  throw std::logic_error("unreachable head");
}

AnnealedLossValue forest_loss_impl(const Forest& forest, const ForestForward& fwd,
                                   std::span<const double> targets,
                                   const std::vector<LabelDistribution>& ldl_targets,
                                   const std::vector<int>& class_targets, double temperature) {
  double risk = 0.0;
  double entropy = 0.0;
  for (std::size_t k = 0; k < forest.trees().size(); ++k) {
    risk += tree_risk(forest, k, fwd, targets, ldl_targets, class_targets);
    entropy += routing_entropy(fwd.routings[k]);
  }
  const double trees = static_cast<double>(forest.trees().size());
  return annealed_loss(risk / trees, entropy / trees, temperature);
}

std::vector<double> forest_split_gradient_impl(const Forest& forest, const Dataset& data,
                                               std::span<const int> indices,
                                               const ForestForward& fwd,
                                               std::span<const double> targets,
                                               const std::vector<LabelDistribution>& ldl_targets,
                                               const std::vector<int>& class_targets,
                                               double temperature) {
  const int samples = static_cast<int>(indices.size());
  const int units = forest.config().feature_dim;
  std::vector<double> upstream(static_cast<std::size_t>(samples) * units, 0.0);
  for (std::size_t k = 0; k < forest.trees().size(); ++k) {
    const SplitGradient grad =
        tree_split_gradient(forest, k, fwd, targets, ldl_targets, class_targets, temperature);
    for (std::size_t v = 0; v < upstream.size(); ++v) upstream[v] += grad.values[v];
  }
  const double inv_trees = 1.0 / static_cast<double>(forest.trees().size());
  for (double& v : upstream) v *= inv_trees;

  std::vector<double> gradient(forest.learner().parameter_count(), 0.0);
  for (int i = 0; i < samples; ++i) {
    const std::span<const double> row =
        std::span<const double>(upstream).subspan(static_cast<std::size_t>(i) * units,
                                                  static_cast<std::size_t>(units));
    forest.learner().backward(data.row(indices[static_cast<std::size_t>(i)]), row, gradient);
  }
  return gradient;
}

double buffered_tree_entropy(const std::vector<std::vector<double>>& leaf_probs) {
  if (leaf_probs.empty()) return 0.0;
  double entropy = 0.0;
  for (const std::vector<double>& row : leaf_probs) {
    for (double p : row) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
  }
  return entropy / static_cast<double>(leaf_probs.size());
}

int nearest_label_index(std::span<const double> labels, double value) {
  std::size_t best = 0;
  double best_distance = std::abs(labels[0] - value);
  for (std::size_t c = 1; c < labels.size(); ++c) {
    const double d = std::abs(labels[c] - value);
    if (d < best_distance) {
      best_distance = d;
      best = c;
    }
  }
  return static_cast<int>(best);
}

void validate_config(const Dataset& data, const TrainConfig& config) {
  if (data.size() == 0) throw std::invalid_argument("training set is empty");
  if (config.tree_count < 1) throw std::invalid_argument("tree count must be >= 1");
  if (config.depth < 1 || config.depth > kMaxTreeDepth) {
    throw std::invalid_argument("tree depth must be in [1, 13]");
  }
  const int splits = (1 << (config.depth - 1)) - 1;
  if (config.feature_dim < std::max(splits, 1)) {
    throw std::invalid_argument("feature_dim must cover the split count (need >= " +
                                std::to_string(std::max(splits, 1)) + ")");
  }
  if (config.batch_size < 1 || config.max_iterations < 1 || config.batches_per_leaf_update < 1 ||
      config.leaf_update_iterations < 1) {
    throw std::invalid_argument("batch/iteration counts must be positive");
  }
  if (config.initial_temperature < 0.0 || config.cooling <= 0.0 || config.cooling >= 1.0) {
    throw std::invalid_argument("need T0 >= 0 and cooling factor in (0, 1)");
  }
  if (config.initial_tau <= 0.0 || config.initial_tau > 1.0) {
    throw std::invalid_argument("initial tau must be in (0, 1]");
  }
  if (config.dndf_ensemble) {
    throw std::runtime_error("alternating per-tree ensemble training is unimplemented");
  }
  if (data.label_info.defined) {
    for (double y : data.targets) {
      if (y < data.label_info.min || y > data.label_info.max) {
        throw std::invalid_argument("target " + std::to_string(y) +
                                    " outside the declared label range");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoint serialization
// ---------------------------------------------------------------------------

json config_to_json(const TrainConfig& c) {
  return json{{"tree_count", c.tree_count},
              {"depth", c.depth},
              {"feature_dim", c.feature_dim},
              {"batches_per_leaf_update", c.batches_per_leaf_update},
              {"batch_size", c.batch_size},
              {"max_iterations", c.max_iterations},
              {"learning_rate", c.learning_rate},
              {"lr_halve_every", c.lr_halve_every},
              {"label_std", c.label_std},
              {"initial_temperature", c.initial_temperature},
              {"initial_tau", c.initial_tau},
              {"cooling", c.cooling},
              {"leaf_update_iterations", c.leaf_update_iterations},
              {"variance_floor", c.variance_floor},
              {"learner_kind", to_string(c.learner_kind)},
              {"hidden", c.hidden},
              {"activation", to_string(c.activation)},
              {"param_seed", c.param_seed},
              {"assignment_seed", c.assignment_seed},
              {"batch_seed", c.batch_seed},
              {"leaf_seed", c.leaf_seed},
              {"dndf_ensemble", c.dndf_ensemble}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.tree_count = j.at("tree_count").get<int>();
  c.depth = j.at("depth").get<int>();
  c.feature_dim = j.at("feature_dim").get<int>();
  c.batches_per_leaf_update = j.at("batches_per_leaf_update").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_iterations = j.at("max_iterations").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.lr_halve_every = j.at("lr_halve_every").get<int>();
  c.label_std = j.at("label_std").get<double>();
  c.initial_temperature = j.at("initial_temperature").get<double>();
  c.initial_tau = j.at("initial_tau").get<double>();
  c.cooling = j.at("cooling").get<double>();
  c.leaf_update_iterations = j.at("leaf_update_iterations").get<int>();
  c.variance_floor = j.at("variance_floor").get<double>();
  c.learner_kind = parse_learner_kind(j.at("learner_kind").get<std::string>());
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.activation = parse_activation_kind(j.at("activation").get<std::string>());
  c.param_seed = j.at("param_seed").get<std::uint64_t>();
  c.assignment_seed = j.at("assignment_seed").get<std::uint64_t>();
  c.batch_seed = j.at("batch_seed").get<std::uint64_t>();
  c.leaf_seed = j.at("leaf_seed").get<std::uint64_t>();
  c.dndf_ensemble = j.at("dndf_ensemble").get<bool>();
  return c;
}

}  // namespace

HeadKind parse_head_kind(const std::string& name) {
  if (name == "ldl") return HeadKind::ldl;
  if (name == "regression") return HeadKind::regression;
  if (name == "classification") return HeadKind::classification;
  throw std::invalid_argument("unknown head '" + name + "'");
}

std::string to_string(HeadKind head) {
  switch (head) {
    case HeadKind::ldl: return "ldl";
    case HeadKind::regression: return "regression";
    case HeadKind::classification: return "classification";
  }
  return "unknown";
}

Forest::Forest(HeadKind head, TrainConfig config, FeatureLearner learner, std::vector<Tree> trees,
               std::vector<double> labels)
    : head_(head),
      config_(std::move(config)),
      learner_(std::move(learner)),
      trees_(std::move(trees)),
      labels_(std::move(labels)) {
  if (trees_.empty()) throw std::invalid_argument("forest needs at least one tree");
  if (head_ != HeadKind::regression && labels_.empty()) {
    throw std::invalid_argument("discrete heads need a label set");
  }
}

std::vector<double> Forest::predict_distribution(std::span<const double> input) const {
  if (head_ == HeadKind::regression) {
    throw std::logic_error("regression head has no discrete output distribution");
  }
  const std::vector<double> f = learner_.forward(input);
  std::vector<double> averaged(labels_.size(), 0.0);
  for (const Tree& tree : trees_) {
    const RoutingResult routing = route(tree.topology, f);
    const LabelDistribution output = tree_output_ldl(routing, tree.cat_leaves);
    for (std::size_t c = 0; c < averaged.size(); ++c) averaged[c] += output[c];
  }
  for (double& v : averaged) v /= static_cast<double>(trees_.size());
  return averaged;
}

double Forest::predict(std::span<const double> input, LdlDecode decode) const {
  if (head_ == HeadKind::regression) {
    const std::vector<double> f = learner_.forward(input);
    double value = 0.0;
    for (const Tree& tree : trees_) {
      const RoutingResult routing = route(tree.topology, f);
      for (std::size_t l = 0; l < tree.gauss_leaves.size(); ++l) {
        value += routing.leaf_probs[l] * tree.gauss_leaves[l].mean;
      }
    }
    return value / static_cast<double>(trees_.size());
  }

  const std::vector<double> averaged = predict_distribution(input);
  if (head_ == HeadKind::ldl && decode == LdlDecode::expectation) {
    double value = 0.0;
    for (std::size_t c = 0; c < averaged.size(); ++c) value += labels_[c] * averaged[c];
    return value;
  }
  const std::size_t best =
      static_cast<std::size_t>(std::max_element(averaged.begin(), averaged.end()) -
                               averaged.begin());
  return labels_[best];
}

void Forest::save(const std::filesystem::path& path) const {
  json j;
  j["format"] = "ddrf-forest";
  j["version"] = 1;
  j["head"] = to_string(head_);
  j["config"] = config_to_json(config_);
  j["labels"] = labels_;
  j["learner"] = json{{"kind", to_string(learner_.spec().kind)},
                      {"input_dim", learner_.spec().input_dim},
                      {"output_dim", learner_.spec().output_dim},
                      {"hidden", learner_.spec().hidden},
                      {"activation", to_string(learner_.spec().activation)},
                      {"seed", learner_.spec().seed},
                      {"parameters", std::vector<double>(learner_.parameters().begin(),
                                                         learner_.parameters().end())}};
  j["schedule"] = json{{"temperature", schedule_.temperature},
                       {"tau", schedule_.tau},
                       {"iteration", schedule_.iteration}};
  j["trees"] = json::array();
  for (const Tree& tree : trees_) {
    json t;
    t["depth"] = tree.topology.depth();
    t["index_assignment"] = tree.topology.index_assignment();
    if (head_ == HeadKind::regression) {
      json leaves = json::array();
      for (const GaussianLeaf& leaf : tree.gauss_leaves) {
        leaves.push_back(json{{"mean", leaf.mean}, {"variance", leaf.variance}});
      }
      t["leaves"] = std::move(leaves);
    } else {
      json leaves = json::array();
      for (const CategoricalLeaf& leaf : tree.cat_leaves) leaves.push_back(leaf.probs);
      t["leaves"] = std::move(leaves);
    }
    j["trees"].push_back(std::move(t));
  }

  std::ofstream file(path);
  if (!file) {
    throw std::runtime_error("cannot write checkpoint '" + path.string() + "'");
  }
  file << j.dump(1) << '\n';
}

Forest Forest::load(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) {
    throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
  }
  json j;
  file >> j;
  if (j.value("format", "") != "ddrf-forest") {
    throw std::runtime_error("'" + path.string() + "' is not a forest checkpoint");
  }

  const HeadKind head = parse_head_kind(j.at("head").get<std::string>());
  TrainConfig config = config_from_json(j.at("config"));

  const json& jl = j.at("learner");
  LearnerSpec spec;
  spec.kind = parse_learner_kind(jl.at("kind").get<std::string>());
  spec.input_dim = jl.at("input_dim").get<int>();
  spec.output_dim = jl.at("output_dim").get<int>();
  spec.hidden = jl.at("hidden").get<std::vector<int>>();
  spec.activation = parse_activation_kind(jl.at("activation").get<std::string>());
  spec.seed = jl.at("seed").get<std::uint64_t>();
  FeatureLearner learner(spec, jl.at("parameters").get<std::vector<double>>());

  std::vector<Tree> trees;
  for (const json& jt : j.at("trees")) {
    Tree tree{TreeTopology(jt.at("depth").get<int>(),
                           jt.at("index_assignment").get<std::vector<int>>(), config.feature_dim),
              {}, {}};
    if (head == HeadKind::regression) {
      for (const json& leaf : jt.at("leaves")) {
        tree.gauss_leaves.push_back(
            GaussianLeaf{leaf.at("mean").get<double>(), leaf.at("variance").get<double>()});
      }
    } else {
      for (const json& leaf : jt.at("leaves")) {
        tree.cat_leaves.push_back(CategoricalLeaf{leaf.get<std::vector<double>>()});
      }
    }
    trees.push_back(std::move(tree));
  }

  Forest forest(head, std::move(config), std::move(learner), std::move(trees),
                j.at("labels").get<std::vector<double>>());
  const json& js = j.at("schedule");
  forest.set_schedule(ScheduleState{js.at("temperature").get<double>(),
                                    js.at("tau").get<double>(), js.at("iteration").get<int>()});
  return forest;
}

AnnealedLossValue forest_loss(const Forest& forest, const Dataset& data,
                              std::span<const int> indices, double temperature) {
  const ForestForward fwd = forest_forward(forest, data, indices);
  const std::vector<double> targets = gather_targets(data, indices);
  std::vector<LabelDistribution> ldl_targets;
  std::vector<int> class_targets;
  if (forest.head() == HeadKind::ldl) {
    ldl_targets = make_ldl_targets(targets, forest.labels(), forest.config().label_std);
  } else if (forest.head() == HeadKind::classification) {
    class_targets = make_class_targets(targets, forest.labels());
  }
  return forest_loss_impl(forest, fwd, targets, ldl_targets, class_targets, temperature);
}

std::vector<double> forest_split_gradient(const Forest& forest, const Dataset& data,
                                          std::span<const int> indices, double temperature) {
  const ForestForward fwd = forest_forward(forest, data, indices);
  const std::vector<double> targets = gather_targets(data, indices);
  std::vector<LabelDistribution> ldl_targets;
  std::vector<int> class_targets;
  if (forest.head() == HeadKind::ldl) {
    ldl_targets = make_ldl_targets(targets, forest.labels(), forest.config().label_std);
  } else if (forest.head() == HeadKind::classification) {
    class_targets = make_class_targets(targets, forest.labels());
  }
  return forest_split_gradient_impl(forest, data, indices, fwd, targets, ldl_targets,
                                    class_targets, temperature);
}

std::vector<double> derive_labels(const Dataset& data, HeadKind head) {
  if (head == HeadKind::regression) return {};
  if (data.label_info.defined) return data.label_info.values();
  if (head == HeadKind::classification) {
    std::set<double> unique(data.targets.begin(), data.targets.end());
    return std::vector<double>(unique.begin(), unique.end());
  }
  // Integer grid over the target range.
  const auto [min_it, max_it] = std::minmax_element(data.targets.begin(), data.targets.end());
  std::vector<double> labels;
  for (double v = std::floor(*min_it); v <= std::ceil(*max_it) + 0.5; v += 1.0) {
    labels.push_back(v);
  }
  return labels;
}

std::vector<LabelDistribution> make_ldl_targets(std::span<const double> targets,
                                                std::span<const double> labels, double label_std) {
  std::vector<LabelDistribution> out;
  out.reserve(targets.size());
  for (double y : targets) out.push_back(generate_label_distribution(y, labels, label_std));
  return out;
}

std::vector<int> make_class_targets(std::span<const double> targets,
                                    std::span<const double> labels) {
  std::vector<int> out;
  out.reserve(targets.size());
  for (double y : targets) out.push_back(nearest_label_index(labels, y));
  return out;
}

TrainResult train(const Dataset& data, HeadKind head, const TrainConfig& config) {
  validate_config(data, config);

  const std::vector<double> labels = derive_labels(data, head);
  const std::size_t class_count = labels.size();

  LearnerSpec spec;
  spec.kind = config.learner_kind;
  spec.input_dim = data.feature_dim;
  spec.output_dim = config.feature_dim;
  spec.hidden = config.hidden;
  spec.activation = config.activation;
  spec.seed = config.param_seed;
  FeatureLearner learner(spec);

  // Topologies draw their unit assignments once, then stay fixed.
  std::mt19937_64 assignment_rng(config.assignment_seed);
  std::mt19937_64 leaf_rng(config.leaf_seed);
  const auto [min_it, max_it] = std::minmax_element(data.targets.begin(), data.targets.end());
  double target_mean = 0.0;
  for (double y : data.targets) target_mean += y;
  target_mean /= static_cast<double>(data.size());
  double target_variance = 0.0;
  for (double y : data.targets) target_variance += (y - target_mean) * (y - target_mean);
  target_variance = std::max(target_variance / static_cast<double>(data.size()),
                             config.variance_floor);

  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(config.tree_count));
  for (int k = 0; k < config.tree_count; ++k) {
    Tree tree{TreeTopology::sample(config.depth, config.feature_dim, assignment_rng), {}, {}};
    const int leaves = tree.topology.leaf_count();
    if (head == HeadKind::regression) {
      std::uniform_real_distribution<double> mean_dist(*min_it, *max_it);
      for (int l = 0; l < leaves; ++l) {
        tree.gauss_leaves.push_back(GaussianLeaf{mean_dist(leaf_rng), target_variance});
      }
    } else {
      tree.cat_leaves.assign(
          static_cast<std::size_t>(leaves),
          CategoricalLeaf{std::vector<double>(class_count, 1.0 / static_cast<double>(class_count))});
    }
    trees.push_back(std::move(tree));
  }

  Forest forest(head, config, std::move(learner), std::move(trees), labels);

  // Per-sample target encodings are fixed for the whole run.
  std::vector<LabelDistribution> all_ldl_targets;
  std::vector<int> all_class_targets;
  if (head == HeadKind::ldl) {
    all_ldl_targets = make_ldl_targets(data.targets, forest.labels(), config.label_std);
  } else if (head == HeadKind::classification) {
    all_class_targets = make_class_targets(data.targets, forest.labels());
  }

  std::mt19937_64 batch_rng(config.batch_seed);
  std::uniform_int_distribution<int> pick(0, data.size() - 1);

  double temperature = config.initial_temperature;
  double tau = head == HeadKind::regression ? config.initial_tau : 1.0;
  int iteration = 0;
  std::vector<TrainRecord> log;

  // Per-tree buffered routings plus the matching targets.
  std::vector<std::vector<std::vector<double>>> buffered_probs(
      static_cast<std::size_t>(config.tree_count));
  std::vector<double> buffered_targets;
  std::vector<LabelDistribution> buffered_ldl;
  std::vector<int> buffered_class;
  int buffered_batches = 0;

  const auto clear_buffers = [&] {
    for (auto& rows : buffered_probs) rows.clear();
    buffered_targets.clear();
    buffered_ldl.clear();
    buffered_class.clear();
    buffered_batches = 0;
  };

  while (iteration < config.max_iterations) {
    while (buffered_batches < config.batches_per_leaf_update &&
           iteration < config.max_iterations) {
      std::vector<int> indices(static_cast<std::size_t>(config.batch_size));
      for (int& index : indices) index = pick(batch_rng);

      ForestForward fwd;
      try {
        fwd = forest_forward(forest, data, indices);
      } catch (const std::runtime_error& error) {
        std::ostringstream snapshot;
        snapshot << error.what() << " at iteration " << iteration << " (T=" << temperature
                 << ", tau=" << tau << ")";
        throw std::runtime_error(snapshot.str());
      }
      const std::vector<double> targets = gather_targets(data, indices);
      std::vector<LabelDistribution> batch_ldl;
      std::vector<int> batch_class;
      if (head == HeadKind::ldl) {
        batch_ldl.reserve(indices.size());
        for (int index : indices) batch_ldl.push_back(all_ldl_targets[static_cast<std::size_t>(index)]);
      } else if (head == HeadKind::classification) {
        batch_class.reserve(indices.size());
        for (int index : indices) {
          batch_class.push_back(all_class_targets[static_cast<std::size_t>(index)]);
        }
      }

      const AnnealedLossValue loss =
          forest_loss_impl(forest, fwd, targets, batch_ldl, batch_class, temperature);
      if (!std::isfinite(loss.total)) {
        std::ostringstream snapshot;
        snapshot << "non-finite loss at iteration " << iteration << " (risk=" << loss.risk
                 << ", entropy=" << loss.entropy << ", T=" << temperature << ", tau=" << tau
                 << ")";
        throw std::runtime_error(snapshot.str());
      }

      const std::vector<double> gradient = forest_split_gradient_impl(
          forest, data, indices, fwd, targets, batch_ldl, batch_class, temperature);
      const double lr =
          scheduled_learning_rate(config.learning_rate, iteration, config.lr_halve_every);
      sgd_step(forest.learner().mutable_parameters(), gradient, lr);
      for (double p : forest.learner().parameters()) {
        if (!std::isfinite(p)) {
          std::ostringstream snapshot;
          snapshot << "non-finite learner parameter after iteration " << iteration
                   << " (lr=" << lr << ", T=" << temperature << ", tau=" << tau << ")";
          throw std::runtime_error(snapshot.str());
        }
      }

      // Buffer the pre-update routings for the coming leaf round.
      for (std::size_t k = 0; k < buffered_probs.size(); ++k) {
        for (const RoutingResult& routing : fwd.routings[k]) {
          buffered_probs[k].push_back(routing.leaf_probs);
        }
      }
      buffered_targets.insert(buffered_targets.end(), targets.begin(), targets.end());
      buffered_ldl.insert(buffered_ldl.end(), batch_ldl.begin(), batch_ldl.end());
      buffered_class.insert(buffered_class.end(), batch_class.begin(), batch_class.end());
      ++buffered_batches;
      ++iteration;
    }

    if (buffered_batches < config.batches_per_leaf_update) break;  // partial tail, no update

    double round_risk = 0.0;
    double round_entropy = 0.0;
    for (std::size_t k = 0; k < forest.trees().size(); ++k) {
      Tree& tree = forest.trees()[k];
      if (head == HeadKind::regression) {
        RegressionLeafBuffer buffer{buffered_probs[k], buffered_targets};
        for (int it = 0; it < config.leaf_update_iterations; ++it) {
          tree.gauss_leaves =
              regression_leaf_update(buffer, tree.gauss_leaves, tau, config.variance_floor);
        }
        round_risk += buffered_regression_risk(buffer, tree.gauss_leaves);
      } else if (head == HeadKind::ldl) {
        LdlLeafBuffer buffer{buffered_probs[k], buffered_ldl};
        for (int it = 0; it < config.leaf_update_iterations; ++it) {
          tree.cat_leaves = ldl_leaf_update(buffer, tree.cat_leaves);
        }
        round_risk += buffered_ldl_risk(buffer, tree.cat_leaves);
      } else {
        ClassificationLeafBuffer buffer{buffered_probs[k], buffered_class};
        for (int it = 0; it < config.leaf_update_iterations; ++it) {
          tree.cat_leaves = classification_leaf_update(buffer, tree.cat_leaves);
        }
        round_risk += buffered_classification_risk(buffer, tree.cat_leaves);
      }
      round_entropy += buffered_tree_entropy(buffered_probs[k]);
    }
    round_risk /= static_cast<double>(forest.trees().size());
    round_entropy /= static_cast<double>(forest.trees().size());
    log.push_back(TrainRecord{iteration, round_risk, round_entropy,
                              round_risk - temperature * round_entropy, temperature, tau});

    clear_buffers();
    temperature = cool_split_temperature(temperature, config.cooling);
    if (head == HeadKind::regression) tau = warm_leaf_schedule(tau, config.cooling);
  }

  forest.set_schedule(ScheduleState{temperature, tau, iteration});
  return TrainResult{std::move(forest), std::move(log)};
}

}  // namespace ddrf
