#include "ddrf/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ddrf {

namespace {

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  const auto end = text.find_last_not_of(" \t\r");
  return begin == std::string::npos ? "" : text.substr(begin, end - begin + 1);
}

int parse_int(const std::string& value) { return std::stoi(value); }
double parse_double(const std::string& value) { return std::stod(value); }
std::uint64_t parse_seed(const std::string& value) { return std::stoull(value); }

bool parse_bool(const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("expected boolean, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& value) {
  std::vector<int> out;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_int(item));
  }
  return out;
}

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

void write_train_log(const std::filesystem::path& path, const std::vector<TrainRecord>& log) {
  std::ofstream file(path);
  file << "iteration,risk,entropy,total,temperature,tau\n";
  for (const TrainRecord& record : log) {
    file << record.iteration << ',' << format_double(record.risk) << ','
         << format_double(record.entropy) << ',' << format_double(record.total) << ','
         << format_double(record.temperature) << ',' << format_double(record.tau) << '\n';
  }
}

void write_leaf_distributions(const std::filesystem::path& path, const Forest& forest) {
  std::ofstream file(path);
  if (forest.head() == HeadKind::regression) {
    file << "tree,leaf,mean,variance\n";
    for (std::size_t k = 0; k < forest.trees().size(); ++k) {
      const Tree& tree = forest.trees()[k];
      for (std::size_t l = 0; l < tree.gauss_leaves.size(); ++l) {
        file << k << ',' << l << ',' << format_double(tree.gauss_leaves[l].mean) << ','
             << format_double(tree.gauss_leaves[l].variance) << '\n';
      }
    }
    return;
  }
  file << "tree,leaf,label,prob\n";
  for (std::size_t k = 0; k < forest.trees().size(); ++k) {
    const Tree& tree = forest.trees()[k];
    for (std::size_t l = 0; l < tree.cat_leaves.size(); ++l) {
      for (std::size_t c = 0; c < tree.cat_leaves[l].probs.size(); ++c) {
        file << k << ',' << l << ',' << format_double(forest.labels()[c]) << ','
             << format_double(tree.cat_leaves[l].probs[c]) << '\n';
      }
    }
  }
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  nlohmann::json j;
  j["mae"] = report.mae;
  nlohmann::json cs = nlohmann::json::object();
  for (const auto& [level, value] : report.cs) cs[format_double(level)] = value;
  j["cs"] = std::move(cs);
  j["sample_count"] = report.abs_errors.size();
  std::ofstream file(path);
  file << j.dump(1) << '\n';
}

}  // namespace

void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value) {
  TrainConfig& t = config.train;
  if (key == "head") config.head = parse_head_kind(value);
  else if (key == "data") config.data_path = value;
  else if (key == "target_column") config.target_column = value;
  else if (key == "synth_samples") config.synth.sample_count = parse_int(value);
  else if (key == "synth_features") config.synth.feature_dim = parse_int(value);
  else if (key == "synth_regimes") config.synth.regime_count = parse_int(value);
  else if (key == "synth_noise") config.synth.noise = parse_double(value);
  else if (key == "synth_seed") config.synth.seed = parse_seed(value);
  else if (key == "test_fraction") config.test_fraction = parse_double(value);
  else if (key == "split_seed") config.split_seed = parse_seed(value);
  else if (key == "label_min") config.label_min = parse_double(value);
  else if (key == "label_max") config.label_max = parse_double(value);
  else if (key == "label_step") config.label_step = parse_double(value);
  else if (key == "decode") {
    if (value == "argmax") config.decode = LdlDecode::argmax;
    else if (value == "expectation") config.decode = LdlDecode::expectation;
    else throw std::invalid_argument("decode must be argmax or expectation");
  }
  else if (key == "cs_level") config.cs_level = parse_double(value);
  else if (key == "out_dir") config.out_dir = value;
  else if (key == "trees") t.tree_count = parse_int(value);
  else if (key == "depth") t.depth = parse_int(value);
  else if (key == "feature_dim") t.feature_dim = parse_int(value);
  else if (key == "batches_per_leaf_update") t.batches_per_leaf_update = parse_int(value);
  else if (key == "batch_size") t.batch_size = parse_int(value);
  else if (key == "max_iterations") t.max_iterations = parse_int(value);
  else if (key == "learning_rate") t.learning_rate = parse_double(value);
  else if (key == "lr_halve_every") t.lr_halve_every = parse_int(value);
  else if (key == "label_std") t.label_std = parse_double(value);
  else if (key == "initial_temperature") t.initial_temperature = parse_double(value);
  else if (key == "initial_tau") t.initial_tau = parse_double(value);
  else if (key == "cooling") t.cooling = parse_double(value);
  else if (key == "leaf_update_iterations") t.leaf_update_iterations = parse_int(value);
  else if (key == "variance_floor") t.variance_floor = parse_double(value);
  else if (key == "learner") t.learner_kind = parse_learner_kind(value);
  else if (key == "hidden") t.hidden = parse_int_list(value);
  else if (key == "activation") t.activation = parse_activation_kind(value);
  else if (key == "param_seed") t.param_seed = parse_seed(value);
  else if (key == "assignment_seed") t.assignment_seed = parse_seed(value);
  else if (key == "batch_seed") t.batch_seed = parse_seed(value);
  else if (key == "leaf_seed") t.leaf_seed = parse_seed(value);
  else if (key == "dndf_ensemble") t.dndf_ensemble = parse_bool(value);
  else throw std::invalid_argument("unknown key");
}

ExperimentConfig parse_experiment_config(std::istream& stream) {
  ExperimentConfig config;
  std::vector<std::string> unknown;
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_number) +
                               " is not a key=value pair: '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_config_entry(config, key, value);
    } catch (const std::invalid_argument& error) {
      if (std::string(error.what()) == "unknown key") {
        unknown.push_back(key);
      } else {
        throw std::runtime_error("config line " + std::to_string(line_number) + " (" + key +
                                 "): " + error.what());
      }
    }
  }
  if (!unknown.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < unknown.size(); ++i) {
      joined += (i ? ", " : "") + unknown[i];
    }
    throw std::runtime_error("unknown config keys: " + joined);
  }
  return config;
}

ExperimentConfig parse_experiment_config(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) {
    throw std::runtime_error("cannot open config file '" + path.string() + "'");
  }
  return parse_experiment_config(file);
}

std::string describe_config(const ExperimentConfig& c) {
  std::ostringstream out;
  const TrainConfig& t = c.train;
  out << "head = " << to_string(c.head) << '\n';
  out << "data = " << (c.data_path.empty() ? "<synthetic>" : c.data_path) << '\n';
  out << "target_column = " << c.target_column << '\n';
  out << "synth_samples = " << c.synth.sample_count << '\n';
  out << "synth_features = " << c.synth.feature_dim << '\n';
  out << "synth_regimes = " << c.synth.regime_count << '\n';
  out << "synth_noise = " << format_double(c.synth.noise) << '\n';
  out << "synth_seed = " << c.synth.seed << '\n';
  out << "test_fraction = " << format_double(c.test_fraction) << '\n';
  out << "split_seed = " << c.split_seed << '\n';
  out << "label_min = " << (c.label_min ? format_double(*c.label_min) : "<auto>") << '\n';
  out << "label_max = " << (c.label_max ? format_double(*c.label_max) : "<auto>") << '\n';
  out << "label_step = " << format_double(c.label_step) << '\n';
  out << "decode = " << (c.decode == LdlDecode::argmax ? "argmax" : "expectation") << '\n';
  out << "cs_level = " << format_double(c.cs_level) << '\n';
  out << "out_dir = " << c.out_dir << '\n';
  out << "trees = " << t.tree_count << '\n';
  out << "depth = " << t.depth << '\n';
  out << "feature_dim = " << t.feature_dim << '\n';
  out << "batches_per_leaf_update = " << t.batches_per_leaf_update << '\n';
  out << "batch_size = " << t.batch_size << '\n';
  out << "max_iterations = " << t.max_iterations << '\n';
  out << "learning_rate = " << format_double(t.learning_rate) << '\n';
  out << "lr_halve_every = " << t.lr_halve_every << '\n';
  out << "label_std = " << format_double(t.label_std) << '\n';
  out << "initial_temperature = " << format_double(t.initial_temperature) << '\n';
  out << "initial_tau = " << format_double(t.initial_tau) << '\n';
  out << "cooling = " << format_double(t.cooling) << '\n';
  out << "leaf_update_iterations = " << t.leaf_update_iterations << '\n';
  out << "variance_floor = " << format_double(t.variance_floor) << '\n';
  out << "learner = " << to_string(t.learner_kind) << '\n';
  out << "hidden = ";
  for (std::size_t i = 0; i < t.hidden.size(); ++i) out << (i ? "," : "") << t.hidden[i];
  out << '\n';
  out << "activation = " << to_string(t.activation) << '\n';
  out << "param_seed = " << t.param_seed << '\n';
  out << "assignment_seed = " << t.assignment_seed << '\n';
  out << "batch_seed = " << t.batch_seed << '\n';
  out << "leaf_seed = " << t.leaf_seed << '\n';
  out << "dndf_ensemble = " << (t.dndf_ensemble ? "true" : "false") << '\n';
  return out.str();
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  Dataset full = config.data_path.empty()
                     ? synth_inhomogeneous(config.synth)
                     : load_csv(config.data_path, CsvSchema{config.target_column});
  if (config.label_min && config.label_max) {
    full.label_info = LabelSetInfo{true, *config.label_min, *config.label_max, config.label_step};
  }
  auto [train_set, test_set] = split_dataset(full, config.test_fraction, config.split_seed);
  if (train_set.size() == 0 || (config.test_fraction > 0.0 && test_set.size() == 0)) {
    throw std::runtime_error("train/test split left an empty side");
  }

  const std::filesystem::path out_dir(config.out_dir);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream run_log(out_dir / "run_log.txt");
    run_log << describe_config(config);
  }

  TrainResult result = train(train_set, config.head, config.train);

  const Dataset& eval_set = test_set.size() > 0 ? test_set : train_set;
  std::vector<double> predictions;
  predictions.reserve(static_cast<std::size_t>(eval_set.size()));
  for (int i = 0; i < eval_set.size(); ++i) {
    predictions.push_back(result.forest.predict(eval_set.row(i), config.decode));
  }
  const double levels[] = {config.cs_level};
  EvalReport report = evaluate(predictions, eval_set.targets, levels);

  write_train_log(out_dir / "train_log.csv", result.log);
  write_leaf_distributions(out_dir / "leaf_distributions.csv", result.forest);
  write_report(out_dir / "report.json", report);
  const std::filesystem::path checkpoint = out_dir / "checkpoint.json";
  result.forest.save(checkpoint);

  {
    std::ofstream run_log(out_dir / "run_log.txt", std::ios::app);
    run_log << "train_samples = " << train_set.size() << '\n';
    run_log << "test_samples = " << test_set.size() << '\n';
    run_log << "test_mae = " << format_double(report.mae) << '\n';
    for (const auto& [level, value] : report.cs) {
      run_log << "test_cs(" << format_double(level) << ") = " << format_double(value) << '\n';
    }
  }

  return ExperimentResult{std::move(report), std::move(result.log), checkpoint};
}

}  // namespace ddrf
