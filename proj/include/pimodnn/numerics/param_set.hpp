#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pimodnn/numerics/errors.hpp"
#include "pimodnn/numerics/tensor.hpp"

namespace pimodnn::numerics {

inline constexpr const char* kParamSetFormat = "pimodnn.paramset/1";

/// One trainable array with its gradient accumulator and Adam moments.
struct Param {
  Tensor2 value;
  Tensor2 grad;
  Tensor2 first_moment;
  Tensor2 second_moment;
  std::int64_t step = 0;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Named parameters. Names listed in the non-negative set are projected onto
/// [0, inf) after every optimizer step.
class ParamSet {
 public:
  void add(const std::string& name, Tensor2 value, bool nonneg = false) {
    if (params_.count(name) != 0) throw ContractError("ParamSet::add: duplicate parameter '" + name + "'");
    Param p;
    p.grad = Tensor2::Zero(value.rows(), value.cols());
    p.first_moment = Tensor2::Zero(value.rows(), value.cols());
    p.second_moment = Tensor2::Zero(value.rows(), value.cols());
    p.value = std::move(value);
    params_.emplace(name, std::move(p));
    if (nonneg) nonneg_.insert(name);
  }

  [[nodiscard]] bool contains(const std::string& name) const { return params_.count(name) != 0; }

  Param& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("ParamSet: unknown parameter '" + name + "'");
    return it->second;
  }
  [[nodiscard]] const Param& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("ParamSet: unknown parameter '" + name + "'");
    return it->second;
  }

  Tensor2& value(const std::string& name) { return at(name).value; }
  [[nodiscard]] const Tensor2& value(const std::string& name) const { return at(name).value; }
  [[nodiscard]] const Tensor2& grad(const std::string& name) const { return at(name).grad; }

  [[nodiscard]] std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, _] : params_) out.push_back(name);
    return out;
  }

  [[nodiscard]] const std::set<std::string>& nonneg_flags() const { return nonneg_; }
  [[nodiscard]] bool is_nonneg(const std::string& name) const { return nonneg_.count(name) != 0; }

  void set_nonneg(const std::string& name, bool flag) {
    at(name);
    if (flag) nonneg_.insert(name); else nonneg_.erase(name);
  }

  [[nodiscard]] std::size_t size() const { return params_.size(); }

  [[nodiscard]] std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  void zero_grad() {
    for (auto& [_, p] : params_) p.grad.setZero();
  }

  /// Clip flagged parameters element-wise to max(v, 0).
  void project() {
    for (const auto& name : nonneg_) {
      auto& v = params_.at(name).value;
      v = v.cwiseMax(0.0);
    }
  }

  [[nodiscard]] bool satisfies_constraints() const {
    for (const auto& name : nonneg_)
      if (params_.at(name).value.minCoeff() < 0.0) return false;
    return true;
  }

  /// One Adam update on every parameter followed by the non-negativity projection.
  void adam_step(double lr, const AdamConfig& cfg = {}) {
    for (auto& [name, p] : params_) {
      ++p.step;
      p.first_moment = cfg.beta1 * p.first_moment + (1.0 - cfg.beta1) * p.grad;
      p.second_moment = cfg.beta2 * p.second_moment + (1.0 - cfg.beta2) * p.grad.cwiseProduct(p.grad);
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step));
      p.value.array() -= lr * (p.first_moment.array() / c1) /
                         ((p.second_moment.array() / c2).sqrt() + cfg.epsilon);
    }
    project();
  }

  /// Overwrite values (not optimizer state) from another set with identical layout.
  void copy_values_from(const ParamSet& other) {
    for (auto& [name, p] : params_) {
      const auto& src = other.at(name).value;
      if (src.rows() != p.value.rows() || src.cols() != p.value.cols())
        throw DimensionError("ParamSet::copy_values_from: shape mismatch for '" + name + "'");
      p.value = src;
    }
  }

  /// target = (1 - tau) * target + tau * source, for every parameter.
  void polyak_from(const ParamSet& source, double tau) {
    // written as a step toward the source so equal tensors stay bit-identical
    for (auto& [name, p] : params_) {
      const Tensor2& src = source.at(name).value;
      if (tau == 1.0) p.value = src;
      else p.value += tau * (src - p.value);
    }
  }

  [[nodiscard]] bool all_finite() const {
    for (const auto& [_, p] : params_)
      if (!p.value.allFinite()) return false;
    return true;
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = kParamSetFormat;
    nlohmann::json arrays = nlohmann::json::object();
    for (const auto& [name, p] : params_) {
      std::vector<double> data(p.value.data(), p.value.data() + p.value.size());
      arrays[name] = {{"rows", p.value.rows()}, {"cols", p.value.cols()}, {"data", data}};
    }
    j["params"] = std::move(arrays);
    j["nonneg"] = std::vector<std::string>(nonneg_.begin(), nonneg_.end());
    return j;
  }

  static ParamSet from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != kParamSetFormat)
      throw InputError(std::string("ParamSet: expected format tag '") + kParamSetFormat + "'");
    ParamSet ps;
    std::set<std::string> nonneg;
    for (const auto& name : j.at("nonneg")) nonneg.insert(name.get<std::string>());
    for (const auto& [name, arr] : j.at("params").items()) {
      const auto rows = arr.at("rows").get<Eigen::Index>();
      const auto cols = arr.at("cols").get<Eigen::Index>();
      const auto data = arr.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw InputError("ParamSet: data length mismatch for '" + name + "'");
      Tensor2 v(rows, cols);
      std::copy(data.begin(), data.end(), v.data());
      ps.add(name, std::move(v), nonneg.count(name) != 0);
    }
    for (const auto& name : nonneg)
      if (!ps.contains(name)) throw InputError("ParamSet: non-negative flag names unknown parameter '" + name + "'");
    return ps;
  }

 private:
  std::map<std::string, Param> params_;
  std::set<std::string> nonneg_;
};

}  // namespace pimodnn::numerics
