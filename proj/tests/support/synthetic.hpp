// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "logitbayes/inference.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace logitbayes::support {

/// Logits of a biased three-class network: class frequencies 50/20/30 %,
/// every class mean leans toward class 0, components correlated (rho 0.3)
/// and classes 1 and 2 noisier than class 0.
inline std::vector<LogitSample> synthetic_logits(std::size_t count, std::uint64_t seed, const std::string& prefix = "s")
{
  const double proportions[3] = {0.5, 0.2, 0.3};
  const Eigen::Matrix3d means{{3.0, 0.4, 0.4}, {1.2, 2.0, 0.3}, {1.2, 0.3, 2.0}};
  const double scales[3] = {1.0, 1.3, 1.3};
  Eigen::Matrix3d cov;
  cov << 1.0, 0.3, 0.3, 0.3, 1.0, 0.3, 0.3, 0.3, 1.0;
  const Eigen::Matrix3d chol = cov.llt().matrixL();

  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick_class(std::begin(proportions), std::end(proportions));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<LogitSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int c = pick_class(rng);
    Eigen::Vector3d z(noise(rng), noise(rng), noise(rng));
    const Eigen::Vector3d x = means.row(c).transpose() + scales[c] * (chol * z);
    out.push_back(LogitSample{prefix + std::to_string(i), {x(0), x(1), x(2)}, c});
  }
  return out;
}

/// Well separated classes: every sample's own logit is clearly the largest.
inline std::vector<LogitSample> separable_logits(std::size_t per_class, std::size_t classes, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<LogitSample> out;
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> logits(classes);
      for (std::size_t k = 0; k < classes; ++k)
        logits[k] = (k == c ? 6.0 : 0.0) + noise(rng);
      out.push_back(LogitSample{"c" + std::to_string(c) + "_" + std::to_string(i), logits, static_cast<int>(c)});
    }
  return out;
}

} // namespace logitbayes::support
