#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pimodnn/models/model.hpp"
#include "pimodnn/numerics/layers.hpp"

namespace pimodnn::models {

/// Purely data-driven comparator: a single-layer LSTM fed [x, w, u] with a linear
/// read-out of the next normalized temperature. No residual path and no constraints.
class RecurrentBaseline final : public ThermalModel {
 public:
  static constexpr Eigen::Index kInputWidth = 7;

  RecurrentBaseline(ModelConfig cfg, std::uint64_t seed) : ThermalModel(std::move(cfg)) {
    config_.flags = {false, false, false};
    numerics::Rng rng(seed);
    numerics::add_lstm(params_, "lstm.cell", kInputWidth, config_.baseline_hidden, rng);
    numerics::add_dense(params_, "lstm.head", config_.baseline_hidden, 1, rng);
  }

  [[nodiscard]] std::string kind() const override { return "lstm"; }

  std::vector<std::pair<std::string, ParamSet*>> named_param_sets() override { return {{"lstm", &params_}}; }

  [[nodiscard]] std::unique_ptr<ThermalModel> clone() const override {
    return std::make_unique<RecurrentBaseline>(*this);
  }

  ParamSet& params() { return params_; }

  class Session final : public StepSession {
   public:
    Session(RecurrentBaseline& m, Tape& t, bool track) : model_(m), tape_(t) {
      cell_ = numerics::bind_lstm(t, m.params_, "lstm.cell", track);
      head_ = numerics::bind_dense(t, m.params_, "lstm.head", track);
    }

    std::vector<Var> initial_carry(Eigen::Index rows) override {
      const Eigen::Index h = model_.config_.baseline_hidden;
      return {tape_.constant(Tensor2::Zero(rows, h)), tape_.constant(Tensor2::Zero(rows, h))};
    }

    Var step(Var x, Var u, Var w, std::vector<Var>& carry) override {
      numerics::LstmState s{carry.at(0), carry.at(1)};
      s = numerics::lstm_cell(cell_, numerics::concat_cols({x, w, u}), s);
      carry[0] = s.h;
      carry[1] = s.c;
      Var out = numerics::dense(head_, s.h);
      require_finite(tape_, out, "LSTM");
      return out;
    }

   private:
    RecurrentBaseline& model_;
    Tape& tape_;
    numerics::LstmVars cell_;
    numerics::DenseVars head_;
  };

  [[nodiscard]] std::unique_ptr<StepSession> session(Tape& t, bool track) override {
    return std::make_unique<Session>(*this, t, track);
  }

 private:
  ParamSet params_;
};

}  // namespace pimodnn::models
