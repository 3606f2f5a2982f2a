#include "ddrf/leaf_update.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ddrf {

namespace {

constexpr double kResponsibilityFloor = 1e-12;

void check_buffer(std::size_t samples, std::size_t targets, std::size_t rows_expected,
                  const std::vector<std::vector<double>>& leaf_probs, std::size_t leaf_count) {
  if (samples == 0) {
    throw std::runtime_error("leaf update requires a non-empty buffer");
  }
  if (samples != targets || samples != rows_expected) {
    throw std::invalid_argument("buffer rows and targets must agree");
  }
  for (const auto& row : leaf_probs) {
    if (row.size() != leaf_count) {
      throw std::invalid_argument("buffered leaf probabilities must have one entry per leaf");
    }
  }
}

double clamped_mixture(const std::vector<double>& leaf_probs,
                       const std::vector<CategoricalLeaf>& leaves, std::size_t cls) {
  double value = 0.0;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    value += leaf_probs[l] * leaves[l].probs[cls];
  }
  return std::max(value, kProbFloor);
}

}  // namespace

std::vector<CategoricalLeaf> ldl_leaf_update(const LdlLeafBuffer& buffer,
                                             const std::vector<CategoricalLeaf>& current) {
  const std::size_t leaf_count = current.size();
  check_buffer(buffer.leaf_probs.size(), buffer.targets.size(), buffer.leaf_probs.size(),
               buffer.leaf_probs, leaf_count);
  const std::size_t class_count = current.empty() ? 0 : current[0].probs.size();

  std::vector<std::vector<double>> numerator(leaf_count, std::vector<double>(class_count, 0.0));
  for (std::size_t i = 0; i < buffer.leaf_probs.size(); ++i) {
    const std::vector<double>& probs = buffer.leaf_probs[i];
    const LabelDistribution& target = buffer.targets[i];
    if (target.size() != class_count) {
      throw std::invalid_argument("target distribution size does not match class count");
    }
    for (std::size_t c = 0; c < class_count; ++c) {
      double mixture = 0.0;
      for (std::size_t l = 0; l < leaf_count; ++l) {
        mixture += probs[l] * current[l].probs[c];
      }
      mixture = std::max(mixture, kProbFloor);
      for (std::size_t l = 0; l < leaf_count; ++l) {
        numerator[l][c] += target[c] * ((probs[l] * current[l].probs[c]) / mixture);
      }
    }
  }

  std::vector<CategoricalLeaf> updated(leaf_count);
  for (std::size_t l = 0; l < leaf_count; ++l) {
    double total = 0.0;
    for (double v : numerator[l]) total += v;
    if (total < kResponsibilityFloor) {
      updated[l] = current[l];
      continue;
    }
    updated[l].probs.resize(class_count);
    for (std::size_t c = 0; c < class_count; ++c) {
      updated[l].probs[c] = numerator[l][c] / total;
    }
  }
  return updated;
}

std::vector<CategoricalLeaf> classification_leaf_update(
    const ClassificationLeafBuffer& buffer, const std::vector<CategoricalLeaf>& current) {
  const std::size_t leaf_count = current.size();
  check_buffer(buffer.leaf_probs.size(), buffer.targets.size(), buffer.leaf_probs.size(),
               buffer.leaf_probs, leaf_count);
  const std::size_t class_count = current.empty() ? 0 : current[0].probs.size();

  std::vector<std::vector<double>> numerator(leaf_count, std::vector<double>(class_count, 0.0));
  std::vector<double> denominator(leaf_count, 0.0);
  for (std::size_t i = 0; i < buffer.leaf_probs.size(); ++i) {
    const std::vector<double>& probs = buffer.leaf_probs[i];
    const std::size_t y = static_cast<std::size_t>(buffer.targets[i]);
    if (y >= class_count) {
      throw std::invalid_argument("class target " + std::to_string(y) + " out of range");
    }
    const double mixture = clamped_mixture(probs, current, y);
    for (std::size_t l = 0; l < leaf_count; ++l) {
      const double responsibility = (probs[l] * current[l].probs[y]) / mixture;
      numerator[l][y] += responsibility;
      denominator[l] += responsibility;
    }
  }

  std::vector<CategoricalLeaf> updated(leaf_count);
  for (std::size_t l = 0; l < leaf_count; ++l) {
    if (denominator[l] < kResponsibilityFloor) {
      updated[l] = current[l];
      continue;
    }
    updated[l].probs.resize(class_count);
    for (std::size_t c = 0; c < class_count; ++c) {
      updated[l].probs[c] = numerator[l][c] / denominator[l];
    }
  }
  return updated;
}

PosteriorMatrix tempered_posterior(const RegressionLeafBuffer& buffer,
                                   std::span<const GaussianLeaf> leaves, double tau) {
  if (tau <= 0.0 || tau > 1.0) {
    throw std::invalid_argument("tempering exponent must be in (0, 1], got " + std::to_string(tau));
  }
  const std::size_t leaf_count = leaves.size();
  check_buffer(buffer.leaf_probs.size(), buffer.targets.size(), buffer.leaf_probs.size(),
               buffer.leaf_probs, leaf_count);

  const int samples = static_cast<int>(buffer.leaf_probs.size());
  PosteriorMatrix posterior{samples, static_cast<int>(leaf_count),
                            std::vector<double>(buffer.leaf_probs.size() * leaf_count, 0.0)};
  std::vector<double> logits(leaf_count);
  for (int i = 0; i < samples; ++i) {
    const double y = buffer.targets[static_cast<std::size_t>(i)];
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < leaf_count; ++l) {
      const double p = std::max(buffer.leaf_probs[static_cast<std::size_t>(i)][l], kProbFloor);
      logits[l] = tau * (std::log(p) + gaussian_log_density(leaves[l], y));
      max_logit = std::max(max_logit, logits[l]);
    }
    double total = 0.0;
    for (std::size_t l = 0; l < leaf_count; ++l) {
      const double v = std::exp(logits[l] - max_logit);
      posterior.at(i, static_cast<int>(l)) = v;
      total += v;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      for (std::size_t l = 0; l < leaf_count; ++l) {
        posterior.at(i, static_cast<int>(l)) = 1.0 / static_cast<double>(leaf_count);
      }
      continue;
    }
    for (std::size_t l = 0; l < leaf_count; ++l) {
      posterior.at(i, static_cast<int>(l)) /= total;
    }
  }
  return posterior;
}

std::vector<GaussianLeaf> regression_leaf_update(const RegressionLeafBuffer& buffer,
                                                 const std::vector<GaussianLeaf>& current,
                                                 double tau, double variance_floor) {
  const PosteriorMatrix posterior = tempered_posterior(buffer, current, tau);
  const int leaf_count = posterior.leaf_count;
  std::vector<GaussianLeaf> updated(current.size());
  for (int l = 0; l < leaf_count; ++l) {
    double mass = 0.0;
    double weighted_target = 0.0;
    for (int i = 0; i < posterior.sample_count; ++i) {
      mass += posterior.at(i, l);
      weighted_target += posterior.at(i, l) * buffer.targets[static_cast<std::size_t>(i)];
    }
    if (mass < kResponsibilityFloor) {
      updated[static_cast<std::size_t>(l)] = current[static_cast<std::size_t>(l)];
      continue;
    }
    // Mean first, then biased variance about the new mean.
    const double mean = weighted_target / mass;
    double weighted_square = 0.0;
    for (int i = 0; i < posterior.sample_count; ++i) {
      const double diff = buffer.targets[static_cast<std::size_t>(i)] - mean;
      weighted_square += posterior.at(i, l) * diff * diff;
    }
    updated[static_cast<std::size_t>(l)] =
        GaussianLeaf{mean, std::max(weighted_square / mass, variance_floor)};
  }
  return updated;
}

double warm_leaf_schedule(double tau, double eta) {
  if (tau < 0.0 || eta <= 0.0) {
    throw std::invalid_argument("warming requires tau >= 0 and eta > 0");
  }
  return std::min(tau / eta, 1.0);
}

double vb_bound(const std::vector<CategoricalLeaf>& candidate,
                const std::vector<CategoricalLeaf>& anchor, const LdlLeafBuffer& buffer) {
  const std::size_t leaf_count = anchor.size();
  check_buffer(buffer.leaf_probs.size(), buffer.targets.size(), buffer.leaf_probs.size(),
               buffer.leaf_probs, leaf_count);
  const std::size_t class_count = anchor.empty() ? 0 : anchor[0].probs.size();

  // phi(pi, anchor) = R(anchor) - (1/N) sum_i sum_c d_c sum_l rho * log(pi/anchor)
  double correction = 0.0;
  for (std::size_t i = 0; i < buffer.leaf_probs.size(); ++i) {
    const std::vector<double>& probs = buffer.leaf_probs[i];
    for (std::size_t c = 0; c < class_count; ++c) {
      const double mixture = clamped_mixture(probs, anchor, c);
      for (std::size_t l = 0; l < leaf_count; ++l) {
        const double responsibility = (probs[l] * anchor[l].probs[c]) / mixture;
        if (responsibility <= 0.0) continue;
        correction += buffer.targets[i][c] * responsibility *
                      std::log(candidate[l].probs[c] / anchor[l].probs[c]);
      }
    }
  }
  return buffered_ldl_risk(buffer, anchor) - correction / static_cast<double>(buffer.leaf_probs.size());
}

double vb_bound(const std::vector<CategoricalLeaf>& candidate,
                const std::vector<CategoricalLeaf>& anchor,
                const ClassificationLeafBuffer& buffer) {
  const std::size_t leaf_count = anchor.size();
  check_buffer(buffer.leaf_probs.size(), buffer.targets.size(), buffer.leaf_probs.size(),
               buffer.leaf_probs, leaf_count);
  double correction = 0.0;
  for (std::size_t i = 0; i < buffer.leaf_probs.size(); ++i) {
    const std::vector<double>& probs = buffer.leaf_probs[i];
    const std::size_t y = static_cast<std::size_t>(buffer.targets[i]);
    const double mixture = clamped_mixture(probs, anchor, y);
    for (std::size_t l = 0; l < leaf_count; ++l) {
      const double responsibility = (probs[l] * anchor[l].probs[y]) / mixture;
      if (responsibility <= 0.0) continue;
      correction += responsibility * std::log(candidate[l].probs[y] / anchor[l].probs[y]);
    }
  }
  return buffered_classification_risk(buffer, anchor) -
         correction / static_cast<double>(buffer.leaf_probs.size());
}

double vb_bound(const std::vector<GaussianLeaf>& candidate,
                const std::vector<GaussianLeaf>& anchor, const RegressionLeafBuffer& buffer) {
  const std::size_t leaf_count = anchor.size();
  check_buffer(buffer.leaf_probs.size(), buffer.targets.size(), buffer.leaf_probs.size(),
               buffer.leaf_probs, leaf_count);
  double correction = 0.0;
  for (std::size_t i = 0; i < buffer.leaf_probs.size(); ++i) {
    const std::vector<double>& probs = buffer.leaf_probs[i];
    const double y = buffer.targets[i];
    double mixture = 0.0;
    std::vector<double> joint(leaf_count);
    for (std::size_t l = 0; l < leaf_count; ++l) {
      joint[l] = probs[l] * gaussian_density(anchor[l], y);
      mixture += joint[l];
    }
    mixture = std::max(mixture, kProbFloor);
    for (std::size_t l = 0; l < leaf_count; ++l) {
      const double responsibility = joint[l] / mixture;
      if (responsibility <= 0.0) continue;
      correction += responsibility *
                    (gaussian_log_density(candidate[l], y) - gaussian_log_density(anchor[l], y));
    }
  }
  return buffered_regression_risk(buffer, anchor) -
         correction / static_cast<double>(buffer.leaf_probs.size());
}

double buffered_ldl_risk(const LdlLeafBuffer& buffer, const std::vector<CategoricalLeaf>& leaves) {
  const std::size_t class_count = leaves.empty() ? 0 : leaves[0].probs.size();
  double risk = 0.0;
  for (std::size_t i = 0; i < buffer.leaf_probs.size(); ++i) {
    for (std::size_t c = 0; c < class_count; ++c) {
      risk -= buffer.targets[i][c] * std::log(clamped_mixture(buffer.leaf_probs[i], leaves, c));
    }
  }
  return risk / static_cast<double>(buffer.leaf_probs.size());
}

double buffered_classification_risk(const ClassificationLeafBuffer& buffer,
                                    const std::vector<CategoricalLeaf>& leaves) {
  double risk = 0.0;
  for (std::size_t i = 0; i < buffer.leaf_probs.size(); ++i) {
    risk -= std::log(clamped_mixture(buffer.leaf_probs[i], leaves,
                                     static_cast<std::size_t>(buffer.targets[i])));
  }
  return risk / static_cast<double>(buffer.leaf_probs.size());
}

double buffered_regression_risk(const RegressionLeafBuffer& buffer,
                                const std::vector<GaussianLeaf>& leaves) {
  double risk = 0.0;
  for (std::size_t i = 0; i < buffer.leaf_probs.size(); ++i) {
    double density = 0.0;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      density += buffer.leaf_probs[i][l] * gaussian_density(leaves[l], buffer.targets[i]);
    }
    risk -= std::log(std::max(density, kProbFloor));
  }
  return risk / static_cast<double>(buffer.leaf_probs.size());
}

}  // namespace ddrf
