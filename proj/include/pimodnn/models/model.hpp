#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pimodnn/models/config.hpp"
#include "pimodnn/models/features.hpp"
#include "pimodnn/numerics/param_set.hpp"
#include "pimodnn/numerics/tape.hpp"

namespace pimodnn::models {

using numerics::ParamSet;
using numerics::Tape;
using numerics::Tensor2;
using numerics::Var;

/// Parameters bound to one tape. All tensors are batched by rows.
///   x: rows x 1 normalized zone temperature
///   u: rows x 1 HVAC load divided by ModelConfig::u_scale_kw
///   w: rows x 5 normalized exogenous channels (t_out, solar, occupancy, sin, cos)
/// `carry` is the recurrent state; step() advances it in place and returns x at the next step.
class StepSession {
 public:
  virtual ~StepSession() = default;
  virtual std::vector<Var> initial_carry(Eigen::Index rows) = 0;
  virtual Var step(Var x, Var u, Var w, std::vector<Var>& carry) = 0;
};

class ThermalModel {
 public:
  explicit ThermalModel(ModelConfig cfg) : config_(std::move(cfg)) { config_.validate(); }
  virtual ~ThermalModel() = default;

  /// "pi-modnn" or "lstm".
  [[nodiscard]] virtual std::string kind() const = 0;
  virtual std::vector<std::pair<std::string, ParamSet*>> named_param_sets() = 0;
  [[nodiscard]] virtual std::unique_ptr<StepSession> session(Tape& t, bool track) = 0;
  [[nodiscard]] virtual std::unique_ptr<ThermalModel> clone() const = 0;

  /// Re-establishes every hard constraint after an optimizer step.
  virtual void project_constraints() {
    for (auto& [name, ps] : named_param_sets()) ps->project();
  }
  [[nodiscard]] virtual bool satisfies_constraints() const { return true; }

  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] const NormStats& stats() const { return stats_; }
  void set_stats(const NormStats& s) { stats_ = s; }

  /// True when the non-negativity projection is part of this model's training.
  [[nodiscard]] bool hard_constrained() const { return kind() == "pi-modnn" && config_.flags.hard_constraints; }
  [[nodiscard]] double alpha() const { return config_.flags.fluctuation_loss ? config_.alpha : 0.0; }

  std::vector<ParamSet*> param_sets() {
    std::vector<ParamSet*> out;
    for (auto& [name, ps] : named_param_sets()) out.push_back(ps);
    return out;
  }

  [[nodiscard]] std::size_t scalar_count() {
    std::size_t n = 0;
    for (auto* ps : param_sets()) n += ps->scalar_count();
    return n;
  }

 protected:
  ModelConfig config_;
  NormStats stats_;
};

inline void require_finite(const Tape& t, Var v, const char* where) {
  if (!numerics::all_finite(t.value(v))) throw NumericalDivergence(std::string(where) + " produced a non-finite output");
}

}  // namespace pimodnn::models
