#pragma once

#include <cmath>
#include <span>
#include <string>

#include "pimodnn/numerics/errors.hpp"
#include "pimodnn/numerics/tape.hpp"

namespace pimodnn::training {

using numerics::Var;

namespace detail {
inline void check_lengths(std::span<const double> meas, std::span<const double> pred, std::size_t min_len,
                          const char* op) {
  if (meas.size() != pred.size())
    throw InputError(std::string(op) + ": length mismatch " + std::to_string(meas.size()) + " vs " +
                     std::to_string(pred.size()));
  if (meas.size() < min_len)
    throw InputError(std::string(op) + ": need at least " + std::to_string(min_len) + " values, got " +
                     std::to_string(meas.size()));
}
}  // namespace detail

/// Mean squared error.
inline double accuracy_loss(std::span<const double> meas, std::span<const double> pred) {
  detail::check_lengths(meas, pred, 1, "accuracy_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < meas.size(); ++i) s += (meas[i] - pred[i]) * (meas[i] - pred[i]);
  return s / static_cast<double>(meas.size());
}

/// Mean absolute mismatch of first differences.
inline double fluctuation_loss(std::span<const double> meas, std::span<const double> pred) {
  detail::check_lengths(meas, pred, 2, "fluctuation_loss");
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < meas.size(); ++i) s += std::abs((meas[i + 1] - meas[i]) - (pred[i + 1] - pred[i]));
  return s / static_cast<double>(meas.size() - 1);
}

inline double total_loss(std::span<const double> meas, std::span<const double> pred, double alpha) {
  if (!(alpha >= 0.0)) throw InputError("total_loss: alpha must be >= 0");
  const double acc = accuracy_loss(meas, pred);
  return alpha == 0.0 ? acc : acc + alpha * fluctuation_loss(meas, pred);
}

/// Tape versions over rows x N matrices (rows = independent series, columns = time).
struct LossTerms {
  Var total;
  Var accuracy;
  Var fluctuation;  // valid only when has_fluctuation
  bool has_fluctuation = false;
};

inline LossTerms loss_terms(Var meas, Var pred, double alpha) {
  auto& t = *pred.tape;
  const auto n = t.value(pred).cols();
  if (t.value(meas).rows() != t.value(pred).rows() || t.value(meas).cols() != n)
    throw DimensionError("loss_terms: meas " + numerics::shape_str(t.value(meas)) + " vs pred " +
                         numerics::shape_str(t.value(pred)));
  LossTerms out;
  out.accuracy = numerics::mean(numerics::square(numerics::sub(meas, pred)));
  out.total = out.accuracy;
  if (n >= 2) {
    Var dm = numerics::sub(numerics::slice_cols(meas, 1, n - 1), numerics::slice_cols(meas, 0, n - 1));
    Var dp = numerics::sub(numerics::slice_cols(pred, 1, n - 1), numerics::slice_cols(pred, 0, n - 1));
    out.fluctuation = numerics::mean(numerics::abs(numerics::sub(dm, dp)));
    out.has_fluctuation = true;
    if (alpha > 0.0) out.total = numerics::add(out.accuracy, numerics::scale(out.fluctuation, alpha));
  }
  return out;
}

}  // namespace pimodnn::training
