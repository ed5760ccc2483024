#pragma once

#include <cmath>
#include <span>
#include <string>

#include "pimodnn/numerics/errors.hpp"

namespace pimodnn::evaluation {

inline double mae(std::span<const double> meas, std::span<const double> pred) {
  if (meas.size() != pred.size())
    throw InputError("mae: length mismatch " + std::to_string(meas.size()) + " vs " + std::to_string(pred.size()));
  if (meas.empty()) throw InputError("mae: empty series");
  double s = 0.0;
  for (std::size_t i = 0; i < meas.size(); ++i) s += std::abs(meas[i] - pred[i]);
  return s / static_cast<double>(meas.size());
}

inline constexpr double kRuleImportanceEpsilon = 1e-6;

/// log10(f(s) + eps) - log10(f(s + i) + eps); positive when adding rule i lowered the metric.
inline double rule_importance(double f_s, double f_si, double epsilon = kRuleImportanceEpsilon) {
  if (!(f_s >= 0.0) || !(f_si >= 0.0)) throw InputError("rule_importance: metric values must be >= 0");
  if (!(epsilon > 0.0)) throw InputError("rule_importance: epsilon must be > 0");
  return std::log10(f_s + epsilon) - std::log10(f_si + epsilon);
}

}  // namespace pimodnn::evaluation
