// Command-line front end: train / eval / synth / baseline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddrf/baseline.hpp"
#include "ddrf/dataset.hpp"
#include "ddrf/experiment.hpp"
#include "ddrf/forest.hpp"
#include "ddrf/metrics.hpp"

namespace {

void print_report(const ddrf::EvalReport& report) {
  std::printf("mae %.6f\n", report.mae);
  for (const auto& [level, value] : report.cs) {
    std::printf("cs(%g) %.2f%%\n", level, value);
  }
}

int run_train(const std::string& config_path, const std::vector<std::string>& overrides) {
  ddrf::ExperimentConfig config;
  if (!config_path.empty()) {
    config = ddrf::parse_experiment_config(config_path);
  }
  for (const std::string& entry : overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("override '" + entry + "' is not key=value");
    }
    ddrf::apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
  }
  const ddrf::ExperimentResult result = ddrf::run_experiment(config);
  std::printf("checkpoint %s\n", result.checkpoint_path.string().c_str());
  print_report(result.report);
  return 0;
}

int run_eval(const std::string& model_path, const std::string& data_path,
             const std::string& target_column, double cs_level, bool expectation) {
  const ddrf::Forest forest = ddrf::Forest::load(model_path);
  const ddrf::Dataset data = ddrf::load_csv(data_path, ddrf::CsvSchema{target_column});
  std::vector<double> predictions;
  predictions.reserve(static_cast<std::size_t>(data.size()));
  const ddrf::LdlDecode decode =
      expectation ? ddrf::LdlDecode::expectation : ddrf::LdlDecode::argmax;
  for (int i = 0; i < data.size(); ++i) {
    predictions.push_back(forest.predict(data.row(i), decode));
  }
  const double levels[] = {cs_level};
  print_report(ddrf::evaluate(predictions, data.targets, levels));
  return 0;
}

int run_synth(const ddrf::SynthConfig& config, const std::string& out_path) {
  const ddrf::Dataset data = ddrf::synth_inhomogeneous(config);
  ddrf::save_csv(out_path, data);
  std::printf("wrote %d samples to %s\n", data.size(), out_path.c_str());
  return 0;
}

int run_baseline(const std::string& data_path, const std::string& target_column,
                 ddrf::BaselineConfig& config, double test_fraction, std::uint64_t split_seed,
                 double cs_level) {
  const ddrf::Dataset full = ddrf::load_csv(data_path, ddrf::CsvSchema{target_column});
  const auto [train_set, test_set] = ddrf::split_dataset(full, test_fraction, split_seed);
  const ddrf::BaselineModel model = ddrf::train_l2_baseline(train_set, config);
  const ddrf::Dataset& eval_set = test_set.size() > 0 ? test_set : train_set;
  std::vector<double> predictions;
  for (int i = 0; i < eval_set.size(); ++i) {
    predictions.push_back(model.predict(eval_set.row(i)));
  }
  const double levels[] = {cs_level};
  print_report(ddrf::evaluate(predictions, eval_set.targets, levels));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable random forest trainer"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Run a training experiment");
  std::string config_path;
  std::vector<std::string> overrides;
  train_cmd->add_option("--config", config_path, "Flat key=value experiment config");
  train_cmd->add_option("--set", overrides, "Config overrides as key=value");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a CSV dataset");
  std::string model_path;
  std::string eval_data;
  std::string eval_target = "target";
  double eval_cs_level = ddrf::kDefaultCsLevel;
  bool expectation = false;
  eval_cmd->add_option("--model", model_path, "Checkpoint path")->required();
  eval_cmd->add_option("--data", eval_data, "CSV dataset")->required();
  eval_cmd->add_option("--target-column", eval_target, "Target column name");
  eval_cmd->add_option("--cs-level", eval_cs_level, "Cumulative-score error level");
  eval_cmd->add_flag("--expectation", expectation, "Use expectation decoding (ldl head)");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate the piecewise-regime benchmark");
  ddrf::SynthConfig synth_config;
  std::string synth_out = "synthetic.csv";
  synth_cmd->add_option("--out", synth_out, "Output CSV path");
  synth_cmd->add_option("--samples", synth_config.sample_count, "Sample count");
  synth_cmd->add_option("--features", synth_config.feature_dim, "Feature dimension");
  synth_cmd->add_option("--regimes", synth_config.regime_count, "Latent regime count");
  synth_cmd->add_option("--noise", synth_config.noise, "Base noise scale");
  synth_cmd->add_option("--seed", synth_config.seed, "Generator seed");

  // baseline
  auto* baseline_cmd = app.add_subcommand("baseline", "Squared-loss readout comparison model");
  std::string baseline_data;
  std::string baseline_target = "target";
  ddrf::BaselineConfig baseline_config;
  double baseline_test_fraction = 0.2;
  std::uint64_t baseline_split_seed = 99;
  double baseline_cs_level = ddrf::kDefaultCsLevel;
  std::string baseline_learner = "linear";
  baseline_cmd->add_option("--data", baseline_data, "CSV dataset")->required();
  baseline_cmd->add_option("--target-column", baseline_target, "Target column name");
  baseline_cmd->add_option("--learner", baseline_learner, "linear or mlp");
  baseline_cmd->add_option("--feature-dim", baseline_config.feature_dim, "Learner output units");
  baseline_cmd->add_option("--hidden", baseline_config.hidden, "Hidden layer widths");
  baseline_cmd->add_option("--iterations", baseline_config.max_iterations, "SGD steps");
  baseline_cmd->add_option("--batch-size", baseline_config.batch_size, "Mini-batch size");
  baseline_cmd->add_option("--learning-rate", baseline_config.learning_rate, "Base step size");
  baseline_cmd->add_option("--test-fraction", baseline_test_fraction, "Held-out fraction");
  baseline_cmd->add_option("--split-seed", baseline_split_seed, "Split seed");
  baseline_cmd->add_option("--cs-level", baseline_cs_level, "Cumulative-score error level");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return run_train(config_path, overrides);
    if (eval_cmd->parsed()) {
      return run_eval(model_path, eval_data, eval_target, eval_cs_level, expectation);
    }
    if (synth_cmd->parsed()) return run_synth(synth_config, synth_out);
    if (baseline_cmd->parsed()) {
      baseline_config.learner_kind = ddrf::parse_learner_kind(baseline_learner);
      return run_baseline(baseline_data, baseline_target, baseline_config,
                          baseline_test_fraction, baseline_split_seed, baseline_cs_level);
    }
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << '\n';
    return 1;
  }
  return 0;
}
