#include "ddrf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ddrf {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream stream(line);
  while (std::getline(stream, cell, ',')) {
    // Trim surrounding whitespace.
    const auto begin = cell.find_first_not_of(" \t\r");
    const auto end = cell.find_last_not_of(" \t\r");
    cells.push_back(begin == std::string::npos ? "" : cell.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string& cell, int data_row, const std::string& column) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw std::runtime_error("parse error at row " + std::to_string(data_row) + ", column '" +
                             column + "': '" + cell + "' is not numeric");
  }
  return value;
}

}  // namespace

std::vector<double> LabelSetInfo::values() const {
  if (!defined) {
    throw std::runtime_error("label set requested but not declared");
  }
  if (step <= 0.0 || max < min) {
    throw std::invalid_argument("label set needs step > 0 and max >= min");
  }
  std::vector<double> labels;
  const int count = static_cast<int>(std::floor((max - min) / step + 0.5)) + 1;
  labels.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    labels.push_back(min + step * c);
  }
  return labels;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream file(path);
  if (!file) {
    throw std::runtime_error("cannot open dataset file '" + path.string() + "'");
  }

  std::string line;
  if (!std::getline(file, line)) {
    throw std::runtime_error("dataset file '" + path.string() + "' is empty");
  }
  const std::vector<std::string> header = split_line(line);
  int target_index = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.target_column) {
      target_index = static_cast<int>(c);
      break;
    }
  }
  if (target_index < 0) {
    throw std::runtime_error("target column '" + schema.target_column + "' not found in '" +
                             path.string() + "'");
  }

  Dataset data;
  data.feature_dim = static_cast<int>(header.size()) - 1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<int>(c) != target_index) data.feature_names.push_back(header[c]);
  }

  int data_row = 0;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    ++data_row;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("parse error at row " + std::to_string(data_row) + ": expected " +
                               std::to_string(header.size()) + " cells, got " +
                               std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double value = parse_cell(cells[c], data_row, header[c]);
      if (static_cast<int>(c) == target_index) {
        data.targets.push_back(value);
      } else {
        data.features.push_back(value);
      }
    }
  }
  if (data.targets.empty()) {
    throw std::runtime_error("dataset file '" + path.string() + "' holds no data rows");
  }
  return data;
}

void save_csv(const std::filesystem::path& path, const Dataset& data,
              const std::string& target_column) {
  std::ofstream file(path);
  if (!file) {
    throw std::runtime_error("cannot write dataset file '" + path.string() + "'");
  }
  for (int c = 0; c < data.feature_dim; ++c) {
    if (c < static_cast<int>(data.feature_names.size())) {
      file << data.feature_names[static_cast<std::size_t>(c)];
    } else {
      file << "x" << c;
    }
    file << ',';
  }
  file << target_column << '\n';

  char buffer[64];
  for (int i = 0; i < data.size(); ++i) {
    const std::span<const double> row = data.row(i);
    for (double v : row) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", v);
      file << buffer << ',';
    }
    std::snprintf(buffer, sizeof(buffer), "%.17g", data.targets[static_cast<std::size_t>(i)]);
    file << buffer << '\n';
  }
}

Dataset synth_inhomogeneous(const SynthConfig& config) {
  if (config.sample_count <= 0 || config.feature_dim < 1 || config.regime_count < 1) {
    throw std::invalid_argument("synthetic config needs positive sizes");
  }
  if (config.noise < 0.0) {
    throw std::invalid_argument("noise scale must be non-negative");
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> feature_dist(-1.0, 1.0);
  std::uniform_real_distribution<double> slope_dist(-6.0, 6.0);
  std::uniform_real_distribution<double> intercept_jitter(-5.0, 5.0);
  std::normal_distribution<double> noise_dist(0.0, 1.0);

  // Regime intercepts are spaced far apart relative to the slopes, so the
  // piecewise map is genuinely inhomogeneous across the first feature.
  std::vector<std::vector<double>> slopes(static_cast<std::size_t>(config.regime_count));
  std::vector<double> intercepts(static_cast<std::size_t>(config.regime_count));
  std::vector<double> noise_scale(static_cast<std::size_t>(config.regime_count));
  for (int r = 0; r < config.regime_count; ++r) {
    slopes[static_cast<std::size_t>(r)].resize(static_cast<std::size_t>(config.feature_dim));
    for (double& w : slopes[static_cast<std::size_t>(r)]) w = slope_dist(rng);
    intercepts[static_cast<std::size_t>(r)] = 20.0 + 40.0 * r + intercept_jitter(rng);
    noise_scale[static_cast<std::size_t>(r)] = config.noise * (1.0 + r);
  }

  Dataset data;
  data.feature_dim = config.feature_dim;
  data.features.reserve(static_cast<std::size_t>(config.sample_count) * config.feature_dim);
  data.targets.reserve(static_cast<std::size_t>(config.sample_count));
  for (int c = 0; c < config.feature_dim; ++c) {
    data.feature_names.push_back("x" + std::to_string(c));
  }

  for (int i = 0; i < config.sample_count; ++i) {
    std::vector<double> row(static_cast<std::size_t>(config.feature_dim));
    for (double& v : row) v = feature_dist(rng);
    const int regime = std::min(
        config.regime_count - 1,
        static_cast<int>((row[0] + 1.0) / 2.0 * config.regime_count));
    double y = intercepts[static_cast<std::size_t>(regime)];
    for (int c = 0; c < config.feature_dim; ++c) {
      y += slopes[static_cast<std::size_t>(regime)][static_cast<std::size_t>(c)] *
           row[static_cast<std::size_t>(c)];
    }
    y += noise_scale[static_cast<std::size_t>(regime)] * noise_dist(rng);
    data.features.insert(data.features.end(), row.begin(), row.end());
    data.targets.push_back(y);
  }
  return data;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double test_fraction,
                                          std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) {
    throw std::invalid_argument("test fraction must be in [0, 1)");
  }
  std::vector<int> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const int test_count = static_cast<int>(std::llround(test_fraction * data.size()));
  Dataset train;
  Dataset test;
  train.feature_dim = test.feature_dim = data.feature_dim;
  train.feature_names = test.feature_names = data.feature_names;
  train.label_info = test.label_info = data.label_info;
  for (int k = 0; k < data.size(); ++k) {
    Dataset& out = k < test_count ? test : train;
    const std::span<const double> row = data.row(order[static_cast<std::size_t>(k)]);
    out.features.insert(out.features.end(), row.begin(), row.end());
    out.targets.push_back(data.targets[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace ddrf
