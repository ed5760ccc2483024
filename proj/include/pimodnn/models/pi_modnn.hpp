#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pimodnn/models/model.hpp"
#include "pimodnn/numerics/layers.hpp"

namespace pimodnn::models {

/// Residual time stepper
///   x(t+1) = x(t) + f_NNA( f_NNB(u(t)) + f_NNE(x(t), w(t), hidden) )
/// f_NNA and f_NNB are ReLU MLPs; with hard constraints their weights are kept >= 0,
/// which makes x(t+1) non-decreasing in u(t). f_NNE is a GRU with a linear head plus a
/// direct leak term -k*x (or, optionally, an MLP over a look-back window of feature vectors).
///
/// Non-negative f_NNA/f_NNB weights only make one step monotone in u. Over a closed-loop
/// rollout the perturbed temperature re-enters f_NNE, and an unconstrained recurrence can
/// overshoot. With hard constraints the GRU therefore takes an order-preserving form:
/// gates see only the exogenous channels, the candidate's weights on x and h are >= 0, the
/// head is >= 0, and the leak is capped so that k * Lip(f_NNA) <= 1. The map
/// (x, h) -> (x', h') is then non-decreasing in x, h and u, so whole trajectories are ordered.
class PiModNn final : public ThermalModel {
 public:
  PiModNn(ModelConfig cfg, std::uint64_t seed) : ThermalModel(std::move(cfg)) {
    numerics::Rng rng(seed);
    const bool nn = config_.flags.hard_constraints;
    const numerics::DenseInit init{1.0, 1.0, nn};
    numerics::add_mlp(fnna_, spec_a(), rng, init, 0.1);
    fnna_.value("fnna.l1.b").setZero();  // start near the identity map x(t+1) = x(t)
    numerics::add_mlp(fnnb_, spec_b(), rng, init);
    if (ordered()) {
      add_ordered_gru(rng);
    } else if (config_.disturbance == DisturbanceNet::Gru) {
      numerics::add_gru(fnne_, "fnne.gru", config_.fnne.in, config_.fnne.hidden, rng);
      numerics::add_dense(fnne_, "fnne.head", config_.fnne.hidden, config_.fnne.out, rng);
      fnne_.add("fnne.leak", numerics::uniform_tensor(1, 1, 0.1, rng));
    } else {
      numerics::add_mlp(fnne_, spec_window(), rng);
    }
    project_constraints();
  }

  /// True when f_NNE uses the order-preserving recurrence.
  [[nodiscard]] bool ordered() const {
    return config_.flags.hard_constraints && config_.disturbance == DisturbanceNet::Gru;
  }

  /// Upper bound on the slope of f_NNA: sum_j W1_j * W2_j (valid when both are >= 0).
  [[nodiscard]] double fnna_lipschitz() const {
    const Tensor2& w1 = fnna_.value("fnna.l0.W");
    const Tensor2& w2 = fnna_.value("fnna.l1.W");
    return (w1.row(0).transpose().array() * w2.col(0).array()).sum();
  }

  void project_constraints() override {
    for (auto* ps : {&fnna_, &fnnb_, &fnne_}) ps->project();
    if (!ordered()) return;
    const double lip = fnna_lipschitz();
    double& k = fnne_.value("fnne.leak")(0, 0);
    if (k * lip > 1.0) k = 1.0 / lip;
  }

  [[nodiscard]] bool satisfies_constraints() const override {
    for (const auto* ps : {&fnna_, &fnnb_, &fnne_})
      if (!ps->satisfies_constraints()) return false;
    return !ordered() || fnne_.value("fnne.leak")(0, 0) * fnna_lipschitz() <= 1.0 + 1e-12;
  }

  [[nodiscard]] std::string kind() const override { return "pi-modnn"; }

  std::vector<std::pair<std::string, ParamSet*>> named_param_sets() override {
    return {{"fnna", &fnna_}, {"fnnb", &fnnb_}, {"fnne", &fnne_}};
  }

  [[nodiscard]] std::unique_ptr<ThermalModel> clone() const override { return std::make_unique<PiModNn>(*this); }

  ParamSet& fnna() { return fnna_; }
  ParamSet& fnnb() { return fnnb_; }
  ParamSet& fnne() { return fnne_; }
  [[nodiscard]] const ParamSet& fnna() const { return fnna_; }
  [[nodiscard]] const ParamSet& fnnb() const { return fnnb_; }
  [[nodiscard]] const ParamSet& fnne() const { return fnne_; }

  /// Smallest weight entry (not bias) across f_NNA and f_NNB.
  [[nodiscard]] double min_constrained_weight() const {
    double m = std::numeric_limits<double>::infinity();
    for (const ParamSet* ps : {&fnna_, &fnnb_})
      for (const auto& name : ps->names())
        if (name.size() > 2 && name.compare(name.size() - 2, 2, ".W") == 0) m = std::min(m, ps->value(name).minCoeff());
    return m;
  }

  class Session final : public StepSession {
   public:
    Session(PiModNn& m, Tape& t, bool track) : model_(m), tape_(t) {
      a_ = numerics::bind_mlp(t, m.fnna_, m.spec_a(), track);
      b_ = numerics::bind_mlp(t, m.fnnb_, m.spec_b(), track);
      if (m.ordered()) {
        for (const char* n : {"Wg", "bg", "a", "Wn", "bn", "Un", "cn"})
          ord_.push_back(t.param(m.fnne_, std::string("fnne.ogru.") + n, track));
        head_ = numerics::bind_dense(t, m.fnne_, "fnne.head", track);
        leak_ = t.param(m.fnne_, "fnne.leak", track);
      } else if (m.config_.disturbance == DisturbanceNet::Gru) {
        gru_ = numerics::bind_gru(t, m.fnne_, "fnne.gru", track);
        head_ = numerics::bind_dense(t, m.fnne_, "fnne.head", track);
        leak_ = t.param(m.fnne_, "fnne.leak", track);
      } else {
        window_ = numerics::bind_mlp(t, m.fnne_, m.spec_window(), track);
      }
    }

    std::vector<Var> initial_carry(Eigen::Index rows) override {
      const auto& c = model_.config_;
      const Eigen::Index width =
          c.disturbance == DisturbanceNet::Gru ? c.fnne.hidden : static_cast<Eigen::Index>(c.fnne.in) * (c.window_len - 1);
      if (width == 0) return {};
      return {tape_.constant(Tensor2::Zero(rows, width))};
    }

    Var step(Var x, Var u, Var w, std::vector<Var>& carry) override {
      Var e = disturbance(x, w, carry);
      require_finite(tape_, e, "f_NNE");
      Var b = numerics::mlp(b_, u);
      require_finite(tape_, b, "f_NNB");
      Var dx = numerics::mlp(a_, numerics::add(b, e));
      require_finite(tape_, dx, "f_NNA");
      return numerics::add(x, dx);
    }

    /// f_NNB(u) alone, used by gain audits.
    Var control_term(Var u) { return numerics::mlp(b_, u); }

   private:
    Var disturbance(Var x, Var w, std::vector<Var>& carry) {
      const auto& c = model_.config_;
      if (model_.ordered()) {
        carry.at(0) = ordered_cell(x, w, carry[0]);
        return numerics::sub(numerics::dense(head_, carry[0]), numerics::matmul(x, leak_));
      }
      Var feat = numerics::concat_cols({x, w});
      if (c.disturbance == DisturbanceNet::Gru) {
        carry.at(0) = numerics::gru_cell(gru_, feat, carry.at(0));
        return numerics::sub(numerics::dense(head_, carry[0]), numerics::matmul(x, leak_));
      }
      if (carry.empty()) return numerics::mlp(window_, feat);
      Var full = numerics::concat_cols({carry[0], feat});
      const Eigen::Index keep = tape_.value(carry[0]).cols();
      carry[0] = numerics::slice_cols(full, c.fnne.in, keep);
      return numerics::mlp(window_, full);
    }

    // r, z from w only; n = tanh(x a + w Wn + bn + r * (h Un + cn)); h' = (1 - z) n + z h
    Var ordered_cell(Var x, Var w, Var h) {
      const Eigen::Index hid = tape_.value(ord_[2]).cols();
      if (tape_.value(h).cols() != hid)
        throw DimensionError("ordered GRU: hidden width " + std::to_string(tape_.value(h).cols()) + ", expected " +
                             std::to_string(hid));
      Var g = numerics::affine(w, ord_[0], ord_[1]);
      Var r = numerics::sigmoid(numerics::slice_cols(g, 0, hid));
      Var z = numerics::sigmoid(numerics::slice_cols(g, hid, hid));
      Var pre = numerics::add(numerics::add(numerics::matmul(x, ord_[2]), numerics::affine(w, ord_[3], ord_[4])),
                              numerics::mul(r, numerics::affine(h, ord_[5], ord_[6])));
      Var n = numerics::tanh(pre);
      return numerics::add(numerics::mul(numerics::one_minus(z), n), numerics::mul(z, h));
    }

    PiModNn& model_;
    Tape& tape_;
    numerics::MlpVars a_, b_, window_;
    numerics::GruVars gru_;
    numerics::DenseVars head_;
    Var leak_;
    std::vector<Var> ord_;
  };

  [[nodiscard]] std::unique_ptr<StepSession> session(Tape& t, bool track) override {
    return std::make_unique<Session>(*this, t, track);
  }

 private:
  [[nodiscard]] numerics::MlpSpec spec_a() const { return {"fnna", {1, config_.fnna.hidden, 1}}; }
  [[nodiscard]] numerics::MlpSpec spec_b() const { return {"fnnb", {1, config_.fnnb.hidden, 1}}; }
  [[nodiscard]] numerics::MlpSpec spec_window() const {
    return {"fnne.window", {static_cast<Eigen::Index>(config_.fnne.in) * config_.window_len, config_.fnne.hidden, 1}};
  }

  void add_ordered_gru(numerics::Rng& rng) {
    const Eigen::Index h = config_.fnne.hidden, nw = config_.fnne.in - 1;
    const double lim = 1.0 / std::sqrt(static_cast<double>(h));
    auto u = [&](Eigen::Index r, Eigen::Index c) { return numerics::uniform_tensor(r, c, lim, rng); };
    fnne_.add("fnne.ogru.Wg", u(nw, 2 * h));
    fnne_.add("fnne.ogru.bg", u(1, 2 * h));
    fnne_.add("fnne.ogru.a", u(1, h).cwiseAbs(), true);
    fnne_.add("fnne.ogru.Wn", u(nw, h));
    fnne_.add("fnne.ogru.bn", u(1, h));
    fnne_.add("fnne.ogru.Un", u(h, h).cwiseAbs(), true);
    fnne_.add("fnne.ogru.cn", u(1, h));
    numerics::add_dense(fnne_, "fnne.head", h, config_.fnne.out, rng, {1.0, 1.0, true});
    fnne_.add("fnne.leak", numerics::uniform_tensor(1, 1, 0.1, rng).cwiseAbs(), true);
  }

  ParamSet fnna_, fnnb_, fnne_;
};

}  // namespace pimodnn::models
