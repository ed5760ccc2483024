#pragma once

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pimodnn/models/model.hpp"
#include "pimodnn/plant/plant.hpp"

namespace pimodnn::models {

/// One forecast problem. `history` holds encoder_len measured records ending at the
/// forecast origin. Step j of the decoder predicts T_z one step after the origin + j
/// from planned_u[j] and future_w[j], i.e. the controls and disturbances held over that
/// interval; planned_u[0] and future_w[0] therefore belong to the last history record.
struct Episode {
  std::vector<plant::TelemetryRecord> history;
  std::vector<double> planned_u;
  std::vector<Disturbance> future_w;
  std::vector<double> target;  // measured T_z at the decoder steps; may be empty
};

/// Episode whose history is records[start, start + enc) and whose targets are the next `dec` records.
inline Episode episode_at(std::span<const plant::TelemetryRecord> records, std::size_t start, int enc, int dec) {
  const std::size_t e = static_cast<std::size_t>(enc), d = static_cast<std::size_t>(dec);
  if (enc < 1 || dec < 1) throw InputError("episode_at: lengths must be >= 1");
  if (start + e + d > records.size())
    throw InputError("episode_at: need " + std::to_string(start + e + d) + " records, have " +
                     std::to_string(records.size()));
  Episode ep;
  ep.history.assign(records.begin() + static_cast<std::ptrdiff_t>(start),
                    records.begin() + static_cast<std::ptrdiff_t>(start + e));
  for (std::size_t j = 0; j < d; ++j) {
    const auto& r = records[start + e - 1 + j];
    ep.planned_u.push_back(r.u_hvac);
    ep.future_w.push_back(disturbance_of(r));
    ep.target.push_back(records[start + e + j].t_zone);
  }
  return ep;
}

/// Batched, normalized step inputs for a set of equal-shaped episodes.
/// Index k runs over the enc + dec - 1 transitions of the joined history/decoder sequence.
struct SequenceBatch {
  Eigen::Index rows = 0;
  int enc = 0;
  int dec = 0;
  std::vector<Tensor2> x_meas;  // enc + dec entries; decoder entries are the targets (zero if unknown)
  std::vector<Tensor2> u;       // enc + dec - 1 entries
  std::vector<Tensor2> w;       // enc + dec - 1 entries

  [[nodiscard]] int transitions() const { return enc + dec - 1; }
};

inline std::array<double, 5> normalized_w(const NormStats& s, const Disturbance& d) {
  auto z = s.normalize({0.0, d});
  return {z[1], z[2], z[3], z[4], z[5]};
}

inline SequenceBatch make_batch(const ThermalModel& model, std::span<const Episode> eps) {
  if (eps.empty()) throw InputError("make_batch: no episodes");
  const int enc = static_cast<int>(eps[0].history.size());
  const int dec = static_cast<int>(eps[0].planned_u.size());
  if (enc < 1 || dec < 1) throw InputError("make_batch: empty history or horizon");
  const NormStats& st = model.stats();
  const double us = model.config().u_scale_kw;
  SequenceBatch b;
  b.rows = static_cast<Eigen::Index>(eps.size());
  b.enc = enc;
  b.dec = dec;
  const int n = enc + dec - 1;
  b.x_meas.assign(static_cast<std::size_t>(n + 1), Tensor2::Zero(b.rows, 1));
  b.u.assign(static_cast<std::size_t>(n), Tensor2::Zero(b.rows, 1));
  b.w.assign(static_cast<std::size_t>(n), Tensor2::Zero(b.rows, 5));
  for (Eigen::Index r = 0; r < b.rows; ++r) {
    const Episode& ep = eps[static_cast<std::size_t>(r)];
    if (static_cast<int>(ep.history.size()) != enc || static_cast<int>(ep.planned_u.size()) != dec ||
        static_cast<int>(ep.future_w.size()) != dec)
      throw InputError("make_batch: episode " + std::to_string(r) + " has mismatched lengths");
    if (!ep.target.empty() && static_cast<int>(ep.target.size()) != dec)
      throw InputError("make_batch: episode " + std::to_string(r) + " target length differs from horizon");
    for (int k = 0; k < enc; ++k) {
      const auto& rec = ep.history[static_cast<std::size_t>(k)];
      b.x_meas[static_cast<std::size_t>(k)](r, 0) = st.norm_temp(rec.t_zone);
      if (k < enc - 1) {
        b.u[static_cast<std::size_t>(k)](r, 0) = rec.u_hvac / us;
        const auto w = normalized_w(st, disturbance_of(rec));
        for (int c = 0; c < 5; ++c) b.w[static_cast<std::size_t>(k)](r, c) = w[static_cast<std::size_t>(c)];
      }
    }
    for (int j = 0; j < dec; ++j) {
      const auto k = static_cast<std::size_t>(enc - 1 + j);
      b.u[k](r, 0) = ep.planned_u[static_cast<std::size_t>(j)] / us;
      const auto w = normalized_w(st, ep.future_w[static_cast<std::size_t>(j)]);
      for (int c = 0; c < 5; ++c) b.w[k](r, c) = w[static_cast<std::size_t>(c)];
      if (!ep.target.empty()) b.x_meas[k + 1](r, 0) = st.norm_temp(ep.target[static_cast<std::size_t>(j)]);
    }
  }
  return b;
}

enum class RunMode {
  /// Every step's state input is measured with probability p_mix, else the previous prediction.
  Mixed,
  /// Measured states through the history, closed loop from the forecast origin on.
  Decode,
};

/// Runs the recurrence over all transitions. Returns predictions for sequence
/// indices 1 .. enc+dec-1 (normalized); element k-1 predicts x_meas[k].
inline std::vector<Var> run_sequence(StepSession& s, Tape& t, const SequenceBatch& b, RunMode mode, double p_mix = 1.0,
                                     std::mt19937_64* rng = nullptr) {
  std::vector<Var> carry = s.initial_carry(b.rows);
  std::vector<Var> preds;
  preds.reserve(static_cast<std::size_t>(b.transitions()));
  std::bernoulli_distribution coin(p_mix);
  Var x = t.constant(b.x_meas[0]);
  for (int k = 0; k < b.transitions(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    if (k > 0) {
      if (mode == RunMode::Decode) {
        if (k < b.enc) x = t.constant(b.x_meas[kk]);
        else x = preds.back();
      } else {
        if (rng == nullptr) throw ContractError("run_sequence: mixed mode needs an RNG");
        Tensor2 keep(b.rows, 1), meas(b.rows, 1);
        for (Eigen::Index r = 0; r < b.rows; ++r) {
          const bool use_meas = coin(*rng);
          keep(r, 0) = use_meas ? 0.0 : 1.0;
          meas(r, 0) = use_meas ? b.x_meas[kk](r, 0) : 0.0;
        }
        x = numerics::add(numerics::mul(preds.back(), t.constant(std::move(keep))), t.constant(std::move(meas)));
      }
    }
    preds.push_back(s.step(x, t.constant(b.u[kk]), t.constant(b.w[kk]), carry));
  }
  return preds;
}

/// Closed-loop decoder trajectories in degC, one row per episode (rows x dec).
inline Tensor2 predict_decoder(ThermalModel& model, const SequenceBatch& b) {
  Tape t;
  auto s = model.session(t, false);
  auto preds = run_sequence(*s, t, b, RunMode::Decode);
  Tensor2 out(b.rows, b.dec);
  const NormStats& st = model.stats();
  for (int j = 0; j < b.dec; ++j) {
    const Tensor2& v = t.value(preds[static_cast<std::size_t>(b.enc - 1 + j)]);
    for (Eigen::Index r = 0; r < b.rows; ++r) out(r, j) = st.denorm_temp(v(r, 0));
  }
  return out;
}

inline Tensor2 predict_decoder(ThermalModel& model, std::span<const Episode> eps) {
  return predict_decoder(model, make_batch(model, eps));
}

/// Model state between steps: normalized temperature plus recurrent carry (single row).
struct ModelState {
  double t_zone_c = 0.0;
  std::vector<Tensor2> carry;
};

/// Runs the history under full teacher forcing. The returned temperature is the
/// last measured value; the carry has absorbed every history record but the last.
inline ModelState encode(ThermalModel& model, std::span<const plant::TelemetryRecord> history) {
  const int enc = model.config().encoder_len;
  if (static_cast<int>(history.size()) != enc)
    throw InputError("encode: history has " + std::to_string(history.size()) + " records, expected " +
                     std::to_string(enc));
  const NormStats& st = model.stats();
  const double us = model.config().u_scale_kw;
  Tape t;
  auto s = model.session(t, false);
  std::vector<Var> carry = s->initial_carry(1);
  for (int k = 0; k + 1 < enc; ++k) {
    const auto& r = history[static_cast<std::size_t>(k)];
    const auto w = normalized_w(st, disturbance_of(r));
    Tensor2 wt(1, 5);
    for (int c = 0; c < 5; ++c) wt(0, c) = w[static_cast<std::size_t>(c)];
    s->step(t.constant(st.norm_temp(r.t_zone)), t.constant(r.u_hvac / us), t.constant(std::move(wt)), carry);
  }
  ModelState out;
  out.t_zone_c = history.back().t_zone;
  for (Var v : carry) out.carry.push_back(t.value(v));
  return out;
}

/// One closed-loop step from `state`; returns the next temperature in degC and advances the carry.
inline double decode_step(ThermalModel& model, ModelState& state, double u_kw, const Disturbance& w) {
  const NormStats& st = model.stats();
  Tape t;
  auto s = model.session(t, false);
  std::vector<Var> carry;
  for (const auto& c : state.carry) carry.push_back(t.constant(c));
  const auto wn = normalized_w(st, w);
  Tensor2 wt(1, 5);
  for (int c = 0; c < 5; ++c) wt(0, c) = wn[static_cast<std::size_t>(c)];
  Var next = s->step(t.constant(st.norm_temp(state.t_zone_c)), t.constant(u_kw / model.config().u_scale_kw),
                     t.constant(std::move(wt)), carry);
  for (std::size_t i = 0; i < carry.size(); ++i) state.carry[i] = t.value(carry[i]);
  state.t_zone_c = st.denorm_temp(t.value(next)(0, 0));
  return state.t_zone_c;
}

inline std::vector<double> rollout(ThermalModel& model, const Episode& ep) {
  Tensor2 p = predict_decoder(model, std::span<const Episode>(&ep, 1));
  return {p.data(), p.data() + p.size()};
}

/// d x(t+1) / d u(t) in degC per kW at the given state, via the tape.
inline double control_gain(ThermalModel& model, const ModelState& state, double u_kw, const Disturbance& w) {
  const NormStats& st = model.stats();
  const double us = model.config().u_scale_kw;
  Tape t;
  auto s = model.session(t, false);
  std::vector<Var> carry;
  for (const auto& c : state.carry) carry.push_back(t.constant(c));
  const auto wn = normalized_w(st, w);
  Tensor2 wt(1, 5);
  for (int c = 0; c < 5; ++c) wt(0, c) = wn[static_cast<std::size_t>(c)];
  Var u = t.variable(numerics::scalar_tensor(u_kw / us));
  Var next = s->step(t.constant(st.norm_temp(state.t_zone_c)), u, t.constant(std::move(wt)), carry);
  t.backward(next);
  return t.grad(u)(0, 0) * st.temp_scale() / us;
}

}  // namespace pimodnn::models
