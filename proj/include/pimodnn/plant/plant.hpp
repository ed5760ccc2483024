#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pimodnn/numerics/errors.hpp"
#include "pimodnn/plant/time.hpp"

namespace pimodnn::plant {

/// Two-node (zone air + envelope mass) thermal network.
struct PlantParams {
  double c_zone = 3e6;      // J/K
  double c_mass = 4e7;      // J/K
  double r_mass_zone = 2e-3;  // K/W
  double r_out_zone = 8e-3;   // K/W
  double r_out_mass = 8e-3;   // K/W
  double solar_aperture = 2.0;  // m^2
  double occupant_gain = 120.0;  // W per person
  double noise_sigma = 0.05;     // degC, sensor only
  double dt = 900.0;             // s

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string("PlantParams.") + name + " must be > 0");
    };
    positive(c_zone, "c_zone");
    positive(c_mass, "c_mass");
    positive(r_mass_zone, "r_mass_zone");
    positive(r_out_zone, "r_out_zone");
    positive(r_out_mass, "r_out_mass");
    positive(dt, "dt");
    if (!(noise_sigma >= 0.0)) throw InputError("PlantParams.noise_sigma must be >= 0");
    if (!(solar_aperture >= 0.0) || !(occupant_gain >= 0.0))
      throw InputError("PlantParams gains must be >= 0");
  }

  /// Largest explicit-Euler sub-step allowed: a tenth of the fastest RC constant.
  [[nodiscard]] double max_substep() const {
    const double fastest = std::min({r_mass_zone * c_zone, r_out_zone * c_zone, r_mass_zone * c_mass,
                                     r_out_mass * c_mass});
    return fastest / 10.0;
  }
};

struct PlantState {
  double t_zone = 22.0;  // degC
  double t_mass = 22.0;  // degC
};

/// Weather and occupancy held over one step.
struct ExogenousSample {
  Timestamp time = 0;
  double t_out = 20.0;   // degC
  double solar = 0.0;    // W/m^2
  double occupancy = 0;  // persons, 0..10
};

/// HVAC command held over one step. u_kw is signed: negative cools, positive heats.
struct HvacCommand {
  double u_kw = 0.0;
  double q_sup = 0.0;  // m^3/s
  double q_out = 0.0;  // m^3/s
  double t_sup = 20.0; // degC
};

/// One sample: the zone reading at `time` plus the inputs applied from `time`
/// until the next sample.
struct TelemetryRecord {
  Timestamp time = 0;
  double t_zone = 0.0;
  double t_out = 0.0;
  double solar = 0.0;
  double occupancy = 0.0;
  double u_hvac = 0.0;
  double q_sup = 0.0;
  double q_out = 0.0;
  double t_sup = 0.0;
};

inline constexpr double kPlausibleMinC = -20.0;
inline constexpr double kPlausibleMaxC = 60.0;

inline void check_plausible(const PlantState& s) {
  if (s.t_zone < kPlausibleMinC || s.t_zone > kPlausibleMaxC || s.t_mass < kPlausibleMinC || s.t_mass > kPlausibleMaxC)
    std::clog << "warning: plant state outside plausible range (zone " << s.t_zone << " C, mass " << s.t_mass
              << " C)\n";
}

/// Advances the plant one step of params.dt seconds with explicit Euler sub-steps.
inline PlantState plant_step(const PlantState& state, double u_kw, double t_out, double solar, double occupancy,
                             const PlantParams& p) {
  for (double v : {state.t_zone, state.t_mass, u_kw, t_out, solar, occupancy})
    if (!std::isfinite(v)) throw InputError("plant_step: non-finite input");
  const int substeps = std::max(1, static_cast<int>(std::ceil(p.dt / p.max_substep() - 1e-12)));
  const double h = p.dt / substeps;
  const double gains = 1000.0 * u_kw + p.occupant_gain * occupancy + p.solar_aperture * solar;
  double tz = state.t_zone;
  double tm = state.t_mass;
  for (int k = 0; k < substeps; ++k) {
    const double q_zone = (tm - tz) / p.r_mass_zone + (t_out - tz) / p.r_out_zone + gains;
    const double q_mass = (tz - tm) / p.r_mass_zone + (t_out - tm) / p.r_out_mass;
    tz += h * q_zone / p.c_zone;
    tm += h * q_mass / p.c_mass;
  }
  PlantState next{tz, tm};
  check_plausible(next);
  return next;
}

inline PlantState plant_step(const PlantState& state, double u_kw, const ExogenousSample& w, const PlantParams& p) {
  return plant_step(state, u_kw, w.t_out, w.solar, w.occupancy, p);
}

/// Control law consulted once per step with the true state and the step's exogenous sample.
using PlantPolicy = std::function<HvacCommand(const PlantState&, const ExogenousSample&)>;

struct SimulationResult {
  std::vector<TelemetryRecord> records;
  std::vector<PlantState> states;  // true state at each record time
};

/// Closed-loop run over `exogenous`. Gaussian sensor noise is added to the
/// reported zone temperature only.
inline SimulationResult simulate(const PlantParams& params, const PlantState& initial,
                                 std::span<const ExogenousSample> exogenous, const PlantPolicy& policy,
                                 std::uint64_t seed) {
  params.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  SimulationResult out;
  out.records.reserve(exogenous.size());
  out.states.reserve(exogenous.size());
  PlantState s = initial;
  for (const auto& w : exogenous) {
    const HvacCommand cmd = policy(s, w);
    TelemetryRecord r;
    r.time = w.time;
    r.t_zone = s.t_zone + params.noise_sigma * noise(rng);
    r.t_out = w.t_out;
    r.solar = w.solar;
    r.occupancy = w.occupancy;
    r.u_hvac = cmd.u_kw;
    r.q_sup = cmd.q_sup;
    r.q_out = cmd.q_out;
    r.t_sup = cmd.t_sup;
    out.records.push_back(r);
    out.states.push_back(s);
    s = plant_step(s, cmd.u_kw, w, params);
  }
  return out;
}

/// Convenience overload checking that per-step inputs line up.
inline SimulationResult simulate(const PlantParams& params, const PlantState& initial,
                                 std::span<const ExogenousSample> exogenous, std::span<const HvacCommand> commands,
                                 std::uint64_t seed) {
  if (exogenous.size() != commands.size())
    throw InputError("simulate: exogenous series has " + std::to_string(exogenous.size()) + " steps but " +
                     std::to_string(commands.size()) + " commands were given");
  std::size_t k = 0;
  return simulate(params, initial, exogenous, [&](const PlantState&, const ExogenousSample&) { return commands[k++]; },
                  seed);
}

}  // namespace pimodnn::plant
