#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "ddrf/dataset.hpp"
#include "ddrf/forest.hpp"
#include "ddrf/metrics.hpp"

namespace ddrf {

/// Full description of one training run: data source, head, label set,
/// training hyper-parameters, decode mode, and output directory.
struct ExperimentConfig {
  HeadKind head = HeadKind::regression;
  TrainConfig train;

  std::string data_path;       // CSV input; empty means synthetic
  std::string target_column = "target";
  SynthConfig synth;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 99;

  std::optional<double> label_min;
  std::optional<double> label_max;
  double label_step = 1.0;

  LdlDecode decode = LdlDecode::argmax;
  double cs_level = kDefaultCsLevel;
  std::string out_dir = "run";
};

/// Parses the flat key=value format ('#' starts a comment). Unknown keys are
/// rejected with a message listing all of them.
ExperimentConfig parse_experiment_config(std::istream& stream);
ExperimentConfig parse_experiment_config(const std::filesystem::path& path);

/// Applies one key=value assignment (shared by config files and CLI flags).
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);

struct ExperimentResult {
  EvalReport report;
  std::vector<TrainRecord> log;
  std::filesystem::path checkpoint_path;
};

/// Trains, evaluates, and writes run_log.txt (resolved config), train_log.csv,
/// checkpoint.json, leaf_distributions.csv, and report.json under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Resolved key=value dump of every config field, defaults included.
std::string describe_config(const ExperimentConfig& config);

}  // namespace ddrf
