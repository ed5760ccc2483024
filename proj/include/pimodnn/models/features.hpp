#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <iostream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "pimodnn/numerics/errors.hpp"
#include "pimodnn/plant/plant.hpp"
#include "pimodnn/plant/time.hpp"

namespace pimodnn::models {

/// Exogenous part of the disturbance-model input at one step.
struct Disturbance {
  double t_out = 0.0;
  double solar = 0.0;
  double occupancy = 0.0;
  double tod_sin = 0.0;
  double tod_cos = 1.0;
};

/// The six disturbance-network inputs: zone temperature followed by the exogenous channels.
struct FeatureVector {
  double t_zone = 0.0;
  Disturbance w;

  [[nodiscard]] std::array<double, 6> to_array() const {
    return {t_zone, w.t_out, w.solar, w.occupancy, w.tod_sin, w.tod_cos};
  }
};

inline Disturbance disturbance_of(const plant::TelemetryRecord& r) {
  const double phase = 2.0 * std::numbers::pi * plant::time_of_day(r.time);
  return {r.t_out, r.solar, r.occupancy, std::sin(phase), std::cos(phase)};
}

inline FeatureVector features_of(const plant::TelemetryRecord& r) { return {r.t_zone, disturbance_of(r)}; }

/// Per-channel z-score statistics for [t_zone, t_out, solar, occupancy].
/// Time-of-day channels are already bounded and pass through unchanged.
struct NormStats {
  static constexpr std::size_t kChannels = 4;
  static constexpr double kVarianceFloor = 1e-6;

  std::array<double, kChannels> mean{0.0, 0.0, 0.0, 0.0};
  std::array<double, kChannels> stddev{1.0, 1.0, 1.0, 1.0};

  [[nodiscard]] double norm_temp(double t_c) const { return (t_c - mean[0]) / stddev[0]; }
  [[nodiscard]] double denorm_temp(double x) const { return x * stddev[0] + mean[0]; }
  /// Scale of one normalized temperature unit in degC.
  [[nodiscard]] double temp_scale() const { return stddev[0]; }

  [[nodiscard]] std::array<double, 6> normalize(const FeatureVector& f) const {
    return {(f.t_zone - mean[0]) / stddev[0], (f.w.t_out - mean[1]) / stddev[1], (f.w.solar - mean[2]) / stddev[2],
            (f.w.occupancy - mean[3]) / stddev[3], f.w.tod_sin, f.w.tod_cos};
  }

  [[nodiscard]] FeatureVector denormalize(const std::array<double, 6>& z) const {
    return {z[0] * stddev[0] + mean[0],
            {z[1] * stddev[1] + mean[1], z[2] * stddev[2] + mean[2], z[3] * stddev[3] + mean[3], z[4], z[5]}};
  }

  [[nodiscard]] nlohmann::json to_json() const { return {{"mean", mean}, {"stddev", stddev}}; }

  static NormStats from_json(const nlohmann::json& j) {
    NormStats s;
    s.mean = j.at("mean").get<std::array<double, kChannels>>();
    s.stddev = j.at("stddev").get<std::array<double, kChannels>>();
    for (double sd : s.stddev)
      if (!(sd > 0.0)) throw InputError("NormStats: non-positive stddev");
    return s;
  }
};

/// Statistics over the given (training) records. Channels whose variance falls
/// below the floor are floored, with a warning on std::clog.
inline NormStats compute_stats(std::span<const plant::TelemetryRecord> records) {
  if (records.empty()) throw InputError("compute_stats: no records");
  static constexpr std::array<const char*, NormStats::kChannels> names{"t_zone", "t_out", "solar", "occupancy"};
  NormStats s;
  const double n = static_cast<double>(records.size());
  for (std::size_t c = 0; c < NormStats::kChannels; ++c) {
    auto get = [c](const plant::TelemetryRecord& r) {
      switch (c) {
        case 0: return r.t_zone;
        case 1: return r.t_out;
        case 2: return r.solar;
        default: return r.occupancy;
      }
    };
    double m = 0.0;
    for (const auto& r : records) m += get(r);
    m /= n;
    double v = 0.0;
    for (const auto& r : records) v += (get(r) - m) * (get(r) - m);
    v /= n;
    if (v < NormStats::kVarianceFloor) {
      std::clog << "warning: channel '" << names[c] << "' has variance " << v << "; flooring at "
                << NormStats::kVarianceFloor << "\n";
      v = NormStats::kVarianceFloor;
    }
    s.mean[c] = m;
    s.stddev[c] = std::sqrt(v);
  }
  return s;
}

}  // namespace pimodnn::models
