#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>

#include "pimodnn/numerics/errors.hpp"

namespace pimodnn::numerics {

/// Dense row-major matrix of doubles. Rows index the batch, columns index features.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::string shape_str(const Tensor2& t) {
  std::ostringstream os;
  os << t.rows() << "x" << t.cols();
  return os.str();
}

inline bool all_finite(const Tensor2& t) { return t.allFinite(); }

inline Tensor2 scalar_tensor(double v) {
  Tensor2 t(1, 1);
  t(0, 0) = v;
  return t;
}

inline Tensor2 row_tensor(std::initializer_list<double> values) {
  Tensor2 t(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index j = 0;
  for (double v : values) t(0, j++) = v;
  return t;
}

inline Tensor2 make_tensor(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.begin()->size());
  Tensor2 t(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Eigen::Index>(row.size()) != c) throw DimensionError("make_tensor: ragged rows");
    Eigen::Index j = 0;
    for (double v : row) t(i, j++) = v;
    ++i;
  }
  return t;
}

}  // namespace pimodnn::numerics
