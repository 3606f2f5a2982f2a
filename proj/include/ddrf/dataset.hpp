#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ddrf {

/// Ordered label-set metadata for the discrete heads.
struct LabelSetInfo {
  bool defined = false;
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;

  std::vector<double> values() const;
};

struct Dataset {
  int feature_dim = 0;
  std::vector<double> features;  // row-major [sample][feature]
  std::vector<double> targets;
  std::vector<std::string> feature_names;
  LabelSetInfo label_info;

  int size() const { return static_cast<int>(targets.size()); }
  std::span<const double> row(int i) const {
    return std::span<const double>(features).subspan(
        static_cast<std::size_t>(i) * feature_dim, static_cast<std::size_t>(feature_dim));
  }
};

struct CsvSchema {
  std::string target_column = "target";
};

/// Parses a header-row CSV of numeric columns; `schema.target_column` names
/// the target. Malformed cells are rejected with their row/column.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes a dataset back to CSV with full double round-trip precision.
void save_csv(const std::filesystem::path& path, const Dataset& data,
              const std::string& target_column = "target");

/// Piecewise-regime benchmark: the first feature's interval selects a latent
/// regime, each regime carries its own affine map and noise scale, so local
/// estimators beat any single global fit.
struct SynthConfig {
  int sample_count = 2000;
  int feature_dim = 4;
  int regime_count = 2;
  double noise = 0.5;
  std::uint64_t seed = 7;
};

Dataset synth_inhomogeneous(const SynthConfig& config);

/// Seeded random split into (train, test).
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double test_fraction,
                                          std::uint64_t seed);

}  // namespace ddrf
