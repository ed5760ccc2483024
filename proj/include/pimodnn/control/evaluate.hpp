#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <functional>
#include <vector>

#include "pimodnn/control/env.hpp"

namespace pimodnn::control {

/// Maps an observation (and the env, for rule-based controllers) to a normalized action.
using Policy = std::function<Action(const std::vector<double>& obs, const ZoneEnv& env)>;

inline Policy baseline_policy(BaselineParams p = {}) {
  return [p](const std::vector<double>&, const ZoneEnv& env) { return env.baseline_action(p); };
}

/// Minimum airflow, no outdoor air, supply air at the zone temperature: no coil duty.
inline Policy zero_duty_policy() {
  return [](const std::vector<double>&, const ZoneEnv& env) {
    const auto& ab = env.config().action_bounds;
    const auto t = env.current().time;
    return normalize_action({ab.q_sup(t).lo, 0.0, env.t_zone()}, ab, t);
  };
}

struct TracePoint {
  plant::Timestamp time = 0;
  double t_zone = 0.0, comfort_lo = 0.0, comfort_hi = 0.0;
  double t_out = 0.0, q_sup = 0.0, q_out = 0.0, t_sup = 0.0, u_kw = 0.0, coil_kw = 0.0, reward = 0.0;
};

struct PolicyReport {
  double energy_kwh = 0.0;
  double violation_ch_per_day = 0.0;
  double peak_kw = 0.0;
  double smoothness = 0.0;  // mean per-step sum of |delta a|
  double mean_reward = 0.0;
  int days = 0;
  std::vector<TracePoint> trace;

  [[nodiscard]] nlohmann::json to_json(bool include_trace = false) const {
    nlohmann::json j = {{"energy_kwh", energy_kwh},   {"violation_ch_per_day", violation_ch_per_day},
                        {"peak_kw", peak_kw},         {"smoothness", smoothness},
                        {"mean_reward", mean_reward}, {"days", days}};
    if (include_trace) {
      nlohmann::json tr = nlohmann::json::array();
      for (const auto& p : trace)
        tr.push_back({{"time", plant::format_iso8601(p.time)}, {"t_zone", p.t_zone}, {"comfort_lo", p.comfort_lo},
                      {"comfort_hi", p.comfort_hi}, {"t_out", p.t_out}, {"q_sup", p.q_sup}, {"q_out", p.q_out},
                      {"t_sup", p.t_sup}, {"u_kw", p.u_kw}, {"coil_kw", p.coil_kw}, {"reward", p.reward}});
      j["trace"] = tr;
    }
    return j;
  }
};

/// Deterministic continuous rollout of `days` days on the plant from the seeded warm-up.
inline PolicyReport evaluate_policy(const Policy& policy, const PlantEnvConfig& pcfg, EnvConfig ecfg, int days,
                                    std::uint64_t seed, bool keep_trace = false) {
  if (days < 1) throw InputError("evaluate_policy: days must be >= 1");
  constexpr double kHoursPerStep = 0.25;
  ecfg.episode_steps = days * 96;
  PlantEnv env(pcfg, ecfg);
  auto obs = env.reset(seed);
  PolicyReport rep;
  rep.days = days;
  double reward_sum = 0.0, smooth_sum = 0.0, viol_ch = 0.0;
  int steps = 0;
  while (!env.done()) {
    const auto a = policy(obs, env);
    const auto t_out = env.current().t_out;
    auto r = env.step(a);
    rep.energy_kwh += r.terms.energy_kw * kHoursPerStep;
    rep.peak_kw = std::max(rep.peak_kw, r.terms.energy_kw);
    viol_ch += r.terms.comfort_f / 1.8 * kHoursPerStep;
    smooth_sum += r.terms.smoothness;
    reward_sum += r.reward;
    ++steps;
    if (keep_trace) {
      const Range band = env.config().comfort_bounds.at(r.time);
      rep.trace.push_back({r.time, r.t_zone, band.lo, band.hi, t_out, r.mapped.q_sup, r.mapped.q_out, r.mapped.t_sup,
                           r.u_kw, r.terms.energy_kw, r.reward});
    }
    obs = std::move(r.obs);
  }
  rep.violation_ch_per_day = viol_ch / days;
  rep.smoothness = smooth_sum / steps;
  rep.mean_reward = reward_sum / steps;
  return rep;
}

}  // namespace pimodnn::control
