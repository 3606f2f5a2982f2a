#include "ddrf/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace ddrf {

EvalReport evaluate(std::span<const double> predictions, std::span<const double> truths,
                    std::span<const double> levels) {
  if (predictions.size() != truths.size()) {
    throw std::invalid_argument("predictions and truths must have equal length");
  }
  if (predictions.empty()) {
    throw std::invalid_argument("evaluation needs at least one sample");
  }

  EvalReport report;
  report.abs_errors.reserve(predictions.size());
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double err = std::abs(predictions[i] - truths[i]);
    report.abs_errors.push_back(err);
    total += err;
  }
  report.mae = total / static_cast<double>(predictions.size());

  for (double level : levels) {
    std::size_t within = 0;
    for (double err : report.abs_errors) {
      if (err <= level) ++within;
    }
    report.cs[level] = 100.0 * static_cast<double>(within) / static_cast<double>(predictions.size());
  }
  return report;
}

EvalReport evaluate(std::span<const double> predictions, std::span<const double> truths) {
  const double default_levels[] = {kDefaultCsLevel};
  return evaluate(predictions, truths, default_levels);
}

}  // namespace ddrf
