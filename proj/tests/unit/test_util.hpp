#pragma once

#include <random>

#include "pimodnn/numerics/tensor.hpp"

namespace testutil {

inline pimodnn::numerics::Tensor2 random_tensor(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double limit) {
  std::uniform_real_distribution<double> u(-limit, limit);
  pimodnn::numerics::Tensor2 t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
  return t;
}

}  // namespace testutil
