#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "pimodnn/plant/plant.hpp"
#include "pimodnn/plant/units.hpp"

namespace pimodnn::plant {

struct ExcitationParams {
  double max_load_kw = 5.0;
  double setpoint_low_c = 19.0;
  double setpoint_high_c = 25.0;
  double gain_kw_per_k = 2.0;
  double q_sup_min = 0.05;   // m^3/s
  double q_sup_max = 0.45;   // m^3/s
  double design_delta_t = 12.0;  // K between supply and zone at nominal flow
  int block_min_steps = 4;
  int block_max_steps = 24;
  double p_free_float = 0.25;
  double p_level = 0.35;     // remainder is thermostat
  double safe_low_c = 15.0;  // level blocks revert to thermostat outside this band
  double safe_high_c = 30.0;
};

/// Data-collection controller: a thermostat with dithered setpoints, random
/// constant-load blocks and free-float periods, so the recorded load covers
/// the full heating and cooling range.
class ExcitationController {
 public:
  enum class Mode { FreeFloat, Thermostat, Level };

  explicit ExcitationController(std::uint64_t seed, ExcitationParams params = {})
      : params_(params), rng_(seed) {}

  HvacCommand operator()(const PlantState& state, const ExogenousSample& /*w*/) {
    if (remaining_ <= 0) new_block();
    --remaining_;
    if (mode_ == Mode::Level && (state.t_zone < params_.safe_low_c || state.t_zone > params_.safe_high_c)) {
      mode_ = Mode::Thermostat;
      setpoint_ = 0.5 * (params_.setpoint_low_c + params_.setpoint_high_c);
    }
    double u = 0.0;
    switch (mode_) {
      case Mode::FreeFloat: u = 0.0; break;
      case Mode::Level: u = level_; break;
      case Mode::Thermostat:
        u = std::clamp(params_.gain_kw_per_k * (setpoint_ - state.t_zone), -params_.max_load_kw, params_.max_load_kw);
        break;
    }
    return command_for(u, state.t_zone);
  }

  [[nodiscard]] Mode mode() const { return mode_; }

  /// Airflow and supply temperature realising load `u_kw` at zone temperature `t_zone`.
  [[nodiscard]] HvacCommand command_for(double u_kw, double t_zone) const {
    HvacCommand c;
    c.u_kw = u_kw;
    if (u_kw == 0.0) {
      c.q_sup = params_.q_sup_min;
      c.t_sup = t_zone;
    } else {
      c.q_sup = std::clamp(std::abs(u_kw) / (units::kAirHeatCapacityRate * params_.design_delta_t), params_.q_sup_min,
                           params_.q_sup_max);
      c.t_sup = t_zone + u_kw / (units::kAirHeatCapacityRate * c.q_sup);
    }
    c.q_out = oa_fraction_ * c.q_sup;
    return c;
  }

 private:
  void new_block() {
    std::uniform_int_distribution<int> len(params_.block_min_steps, params_.block_max_steps);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    remaining_ = len(rng_);
    const double m = unit(rng_);
    if (m < params_.p_free_float) mode_ = Mode::FreeFloat;
    else if (m < params_.p_free_float + params_.p_level) mode_ = Mode::Level;
    else mode_ = Mode::Thermostat;
    level_ = params_.max_load_kw * (2.0 * unit(rng_) - 1.0);
    setpoint_ = params_.setpoint_low_c + (params_.setpoint_high_c - params_.setpoint_low_c) * unit(rng_);
    oa_fraction_ = 0.1 + 0.9 * unit(rng_);
  }

  ExcitationParams params_;
  std::mt19937_64 rng_;
  Mode mode_ = Mode::Thermostat;
  int remaining_ = 0;
  double level_ = 0.0;
  double setpoint_ = 22.0;
  double oa_fraction_ = 0.3;
};

}  // namespace pimodnn::plant
