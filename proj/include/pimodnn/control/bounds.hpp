#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "pimodnn/numerics/errors.hpp"
#include "pimodnn/plant/time.hpp"

namespace pimodnn::control {

struct Schedule {
  double occupied_start_h = 6.0;
  double occupied_end_h = 18.0;

  [[nodiscard]] bool occupied(plant::Timestamp t) const {
    const double h = plant::hour_of_day(t);
    return h >= occupied_start_h && h < occupied_end_h;
  }
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct ActionBounds {
  Range q_sup_occupied{0.09, 0.28};
  Range q_sup_unoccupied{0.0, 0.28};
  Range t_sup{12.8, 32.2};
  Schedule schedule;

  [[nodiscard]] Range q_sup(plant::Timestamp t) const {
    return schedule.occupied(t) ? q_sup_occupied : q_sup_unoccupied;
  }

  void validate() const {
    for (const Range& r : {q_sup_occupied, q_sup_unoccupied, t_sup})
      if (!(r.lo <= r.hi)) throw InputError("ActionBounds: lower bound above upper bound");
    if (q_sup_unoccupied.lo < 0.0 || q_sup_occupied.lo < 0.0) throw InputError("ActionBounds: negative airflow");
  }
};

struct ComfortBounds {
  Range occupied{21.7, 24.0};
  Range unoccupied{18.3, 26.7};
  Schedule schedule;

  [[nodiscard]] Range at(plant::Timestamp t) const { return schedule.occupied(t) ? occupied : unoccupied; }

  void validate() const {
    if (!(occupied.lo <= occupied.hi) || !(unoccupied.lo <= unoccupied.hi))
      throw InputError("ComfortBounds: lower bound above upper bound");
    if (occupied.lo < unoccupied.lo || occupied.hi > unoccupied.hi)
      throw InputError("ComfortBounds: occupied band must lie inside the unoccupied band");
  }
};

/// Physical actions after clamping, plus the requested (pre-clamp) values used for the
/// action-violation penalty.
struct MappedAction {
  double q_sup = 0.0;
  double q_out = 0.0;
  double t_sup = 0.0;
  double req_q_sup = 0.0;
  double req_q_out = 0.0;
  double req_t_sup = 0.0;
  Range q_sup_range;
  Range q_out_range;
};

inline double affine_map(double a, Range r) { return r.lo + 0.5 * (a + 1.0) * (r.hi - r.lo); }

/// a in [-1, 1]^3 ordered (q_sup, q_out, t_sup). The q_out range is [0, q_sup] with the
/// clamped q_sup, so q_out <= q_sup always holds.
inline MappedAction map_action(const std::array<double, 3>& a, const ActionBounds& b, plant::Timestamp t) {
  MappedAction m;
  m.q_sup_range = b.q_sup(t);
  m.req_q_sup = affine_map(a[0], m.q_sup_range);
  m.q_sup = std::clamp(m.req_q_sup, m.q_sup_range.lo, m.q_sup_range.hi);
  m.q_out_range = {0.0, m.q_sup};
  m.req_q_out = affine_map(a[1], m.q_out_range);
  m.q_out = std::clamp(m.req_q_out, 0.0, m.q_sup);
  m.req_t_sup = affine_map(a[2], b.t_sup);
  m.t_sup = std::clamp(m.req_t_sup, b.t_sup.lo, b.t_sup.hi);
  return m;
}

}  // namespace pimodnn::control
