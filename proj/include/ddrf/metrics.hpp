#pragma once

#include <map>
#include <span>
#include <vector>

namespace ddrf {

/// MAE plus cumulative scores: CS(l) = percentage of samples whose absolute
/// error is not greater than l.
struct EvalReport {
  double mae = 0.0;
  std::map<double, double> cs;
  std::vector<double> abs_errors;
};

inline constexpr double kDefaultCsLevel = 5.0;

EvalReport evaluate(std::span<const double> predictions, std::span<const double> truths,
                    std::span<const double> levels);
EvalReport evaluate(std::span<const double> predictions, std::span<const double> truths);

}  // namespace ddrf
