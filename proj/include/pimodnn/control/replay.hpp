#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <unordered_set>
#include <vector>

#include "pimodnn/numerics/errors.hpp"

namespace pimodnn::control {

struct Transition {
  std::vector<double> obs;
  std::array<double, 3> action{};
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;
};

/// Fixed-capacity ring buffer. Once full, each push overwrites the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw InputError("ReplayBuffer: capacity must be > 0");
    data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  void push(Transition t) {
    if (data_.size() < cap_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);
    }
    head_ = (head_ + 1) % cap_;
    ++pushed_;
  }

  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] std::size_t capacity() const { return cap_; }
  [[nodiscard]] std::size_t total_pushed() const { return pushed_; }

  /// i = 0 is the oldest live entry.
  [[nodiscard]] const Transition& at(std::size_t i) const {
    if (i >= data_.size()) throw ContractError("ReplayBuffer::at: index out of range");
    const std::size_t oldest = data_.size() < cap_ ? 0 : head_;
    return data_[(oldest + i) % cap_];
  }

  /// Uniform sample of distinct indices (Floyd's algorithm).
  template <class Rng>
  [[nodiscard]] std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
    if (n > data_.size()) throw ContractError("ReplayBuffer: batch larger than buffer");
    std::vector<std::size_t> out;
    out.reserve(n);
    std::unordered_set<std::size_t> seen;
    const std::size_t m = data_.size();
    for (std::size_t j = m - n; j < m; ++j) {
      std::uniform_int_distribution<std::size_t> d(0, j);
      const std::size_t t = d(rng);
      if (seen.insert(t).second) {
        out.push_back(t);
      } else {
        seen.insert(j);
        out.push_back(j);
      }
    }
    return out;
  }

  [[nodiscard]] const Transition& raw(std::size_t slot) const { return data_[slot]; }

 private:
  std::size_t cap_;
  std::size_t head_ = 0;
  std::size_t pushed_ = 0;
  std::vector<Transition> data_;
};

}  // namespace pimodnn::control
