#pragma once

#include <algorithm>

#include "pimodnn/control/bounds.hpp"

namespace pimodnn::control {

/// Rule-based stand-in for a Guideline 36 single-zone sequence: proportional airflow
/// between the current min/max, outdoor-air supply temperature reset, fixed minimum
/// outdoor air when occupied.
struct BaselineParams {
  double setpoint_margin_c = 0.5;  // loop setpoints sit this far inside the comfort band
  double proportional_band_c = 0.5;
  double prestart_h = 1.0;  // warm-up / cool-down toward the occupied band before occupancy
  double oa_fraction = 0.3;
  double reset_t_sup_warm_c = 18.0;  // deadband supply temperature at cool outdoor air
  double reset_oat_low_c = 16.0;
  double reset_oat_high_c = 21.0;
};

struct PhysicalAction {
  double q_sup = 0.0;
  double q_out = 0.0;
  double t_sup = 0.0;
};

inline PhysicalAction baseline_controller(double t_zone_c, double t_out_c, plant::Timestamp t, const ActionBounds& ab,
                                          const ComfortBounds& cb, const BaselineParams& p = {}) {
  // track the tighter of the current band and the band prestart_h ahead, so the loop
  // neither relaxes before occupancy ends nor starts late before it begins
  const Range now = cb.at(t), ahead = cb.at(t + static_cast<plant::Timestamp>(p.prestart_h * 3600.0));
  const Range band{std::max(now.lo, ahead.lo), std::min(now.hi, ahead.hi)};
  const Range q = ab.q_sup(t);
  const double cool = std::clamp((t_zone_c - (band.hi - p.setpoint_margin_c)) / p.proportional_band_c, 0.0, 1.0);
  const double heat = std::clamp(((band.lo + p.setpoint_margin_c) - t_zone_c) / p.proportional_band_c, 0.0, 1.0);

  // supply temperature reset: coldest supply air on warm days
  const double f = std::clamp((t_out_c - p.reset_oat_low_c) / (p.reset_oat_high_c - p.reset_oat_low_c), 0.0, 1.0);
  const double t_base = p.reset_t_sup_warm_c + f * (ab.t_sup.lo - p.reset_t_sup_warm_c);

  PhysicalAction a;
  a.q_sup = q.lo + std::max(cool, heat) * (q.hi - q.lo);
  a.t_sup = heat > 0.0 ? t_base + heat * (ab.t_sup.hi - t_base) : t_base - cool * (t_base - ab.t_sup.lo);
  a.t_sup = std::clamp(a.t_sup, ab.t_sup.lo, ab.t_sup.hi);
  a.q_out = ab.schedule.occupied(t) ? p.oa_fraction * a.q_sup : 0.0;
  return a;
}

/// Inverse of map_action for in-bounds physical actions. A degenerate range maps to -1.
inline std::array<double, 3> normalize_action(const PhysicalAction& pa, const ActionBounds& ab, plant::Timestamp t) {
  auto inv = [](double v, Range r) {
    if (r.hi - r.lo <= 0.0) return -1.0;
    return std::clamp(2.0 * (v - r.lo) / (r.hi - r.lo) - 1.0, -1.0, 1.0);
  };
  const Range q = ab.q_sup(t);
  const double q_sup = std::clamp(pa.q_sup, q.lo, q.hi);
  return {inv(q_sup, q), inv(pa.q_out, {0.0, q_sup}), inv(pa.t_sup, ab.t_sup)};
}

}  // namespace pimodnn::control
