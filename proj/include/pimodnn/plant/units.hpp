#pragma once

namespace pimodnn::units {

inline constexpr double kAirDensity = 1.2;         // kg/m^3
inline constexpr double kAirSpecificHeat = 1.005;  // kJ/(kg K)
inline constexpr double kCfmPerM3s = 2118.88;

/// kW delivered per (m^3/s * K) of supply air.
inline constexpr double kAirHeatCapacityRate = kAirDensity * kAirSpecificHeat;

constexpr double c_to_f(double c) { return c * 1.8 + 32.0; }
constexpr double delta_c_to_f(double dc) { return dc * 1.8; }
constexpr double m3s_to_cfm(double q) { return q * kCfmPerM3s; }

/// Sensible load (kW) of supply air entering a zone: positive heats.
constexpr double supply_load_kw(double q_sup, double t_sup, double t_zone) {
  return kAirHeatCapacityRate * q_sup * (t_sup - t_zone);
}

}  // namespace pimodnn::units
