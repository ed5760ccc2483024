#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>

#include "pimodnn/control/bounds.hpp"
#include "pimodnn/plant/units.hpp"

namespace pimodnn::control {

struct RewardWeights {
  double comfort = -0.1;        // r1, per degF
  double action_q_sup = -0.01;  // r2, per CFM
  double action_q_out = -0.01;  // r2, per CFM
  double action_t_sup = -0.033; // r2, per degF
  double energy = -1e-4;        // r3, per kW
  double airflow = -2.5e-5;     // r4, per CFM
  double comfort_bonus = 0.04;  // r5
  double smoothness = -1e-3;    // r6

  void validate() const {
    for (double v : {comfort, action_q_sup, action_q_out, action_t_sup, energy, airflow, comfort_bonus, smoothness})
      if (!std::isfinite(v)) throw InputError("RewardWeights: non-finite weight");
  }
};

inline nlohmann::json reward_weights_to_json(const RewardWeights& w) {
  return {{"r1_comfort", w.comfort},       {"r2_q_sup", w.action_q_sup}, {"r2_q_out", w.action_q_out},
          {"r2_t_sup", w.action_t_sup},    {"r3_energy", w.energy},      {"r4_airflow", w.airflow},
          {"r5_comfort_bonus", w.comfort_bonus}, {"r6_smoothness", w.smoothness}};
}

inline double comfort_violation(double t_zone_c, Range band) {
  const double tf = units::c_to_f(t_zone_c);
  return std::max(0.0, tf - units::c_to_f(band.hi)) + std::max(0.0, units::c_to_f(band.lo) - tf);
}

inline double comfort_violation(double t_zone_c, const ComfortBounds& b, plant::Timestamp t) {
  return comfort_violation(t_zone_c, b.at(t));
}

inline double exceed(double v, Range r) { return std::max(0.0, v - r.hi) + std::max(0.0, r.lo - v); }

struct ActionViolation {
  double q_sup_cfm = 0.0;
  double q_out_cfm = 0.0;
  double t_sup_f = 0.0;

  [[nodiscard]] double total() const { return q_sup_cfm + q_out_cfm + t_sup_f; }
};

/// Uses the requested (pre-clamp) values carried in `m`.
inline ActionViolation action_violation(const MappedAction& m, const ActionBounds& b) {
  return {units::m3s_to_cfm(exceed(m.req_q_sup, m.q_sup_range)), units::m3s_to_cfm(exceed(m.req_q_out, m.q_out_range)),
          units::delta_c_to_f(exceed(m.req_t_sup, b.t_sup))};
}

/// Coil duty magnitude in kW; heating and cooling duty are both penalized.
inline double coil_energy(double q_sup, double q_out, double t_out, double t_room, double t_sup) {
  if (q_out > q_sup + 1e-12) throw ContractError("coil_energy: q_out exceeds q_sup");
  if (q_sup <= 0.0) return 0.0;
  const double f = q_out / q_sup;
  const double mix = f * t_out + (1.0 - f) * t_room;
  return std::abs(units::kAirHeatCapacityRate * q_sup * (mix - t_sup));
}

inline double smoothness_penalty(const std::array<double, 3>& a, const std::array<double, 3>& prev) {
  return std::abs(a[0] - prev[0]) + std::abs(a[1] - prev[1]) + std::abs(a[2] - prev[2]);
}

struct RewardTerms {
  double comfort_f = 0.0;     // l_s
  ActionViolation action;     // l_a
  double energy_kw = 0.0;     // l_e
  double airflow_cfm = 0.0;   // l_Q
  double comfortable = 0.0;   // l_c
  double smoothness = 0.0;    // l_r
  double reward = 0.0;
};

inline double combine(RewardTerms& t, const RewardWeights& w) {
  t.comfortable = (t.comfort_f == 0.0 && t.action.total() == 0.0) ? 1.0 : 0.0;
  t.reward = w.comfort * t.comfort_f + w.action_q_sup * t.action.q_sup_cfm + w.action_q_out * t.action.q_out_cfm +
             w.action_t_sup * t.action.t_sup_f + w.energy * t.energy_kw + w.airflow * t.airflow_cfm +
             w.comfort_bonus * t.comfortable + w.smoothness * t.smoothness;
  return t.reward;
}

/// Reward for one transition. Comfort is judged on the temperature the action produced
/// (`t_zone_next`); the coil sees return air at the temperature when the action was taken.
inline RewardTerms reward_terms(const MappedAction& m, const std::array<double, 3>& a, const std::array<double, 3>& prev,
                                double t_zone_now, double t_zone_next, double t_out, Range comfort_band,
                                const ActionBounds& bounds, const RewardWeights& w) {
  RewardTerms t;
  t.comfort_f = comfort_violation(t_zone_next, comfort_band);
  t.action = action_violation(m, bounds);
  t.energy_kw = coil_energy(m.q_sup, m.q_out, t_out, t_zone_now, m.t_sup);
  t.airflow_cfm = units::m3s_to_cfm(m.q_sup);
  t.smoothness = smoothness_penalty(a, prev);
  combine(t, w);
  return t;
}

}  // namespace pimodnn::control
