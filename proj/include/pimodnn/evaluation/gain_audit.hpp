#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "pimodnn/models/sequence.hpp"

namespace pimodnn::evaluation {

struct GainPoint {
  models::ModelState state;
  double u_kw = 0.0;
  models::Disturbance w;
};

struct GainAuditReport {
  std::size_t points = 0;
  std::size_t negative = 0;
  double worst_gain = std::numeric_limits<double>::infinity();
  std::size_t worst_index = 0;

  [[nodiscard]] double negative_fraction() const {
    return points == 0 ? 0.0 : static_cast<double>(negative) / static_cast<double>(points);
  }

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"points", points},
            {"negative", negative},
            {"negative_fraction", negative_fraction()},
            {"worst_gain_c_per_kw", worst_gain},
            {"worst_index", worst_index}};
  }
};

/// Grid of audit points: encoder states from the given episodes, with temperature offsets
/// in [-3, 3] degC, u uniform in [-u_limit, u_limit] and the episode's first-step disturbance.
inline std::vector<GainPoint> gain_grid(models::ThermalModel& model, std::span<const models::Episode> episodes,
                                        std::size_t per_episode, std::uint64_t seed, double u_limit_kw = 5.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> du(-u_limit_kw, u_limit_kw), dx(-3.0, 3.0);
  std::vector<GainPoint> out;
  for (const auto& ep : episodes) {
    const auto base = models::encode(model, ep.history);
    for (std::size_t i = 0; i < per_episode; ++i) {
      GainPoint p{base, du(rng), ep.future_w.at(0)};
      p.state.t_zone_c += dx(rng);
      out.push_back(std::move(p));
    }
  }
  return out;
}

inline GainAuditReport gain_sign_audit(models::ThermalModel& model, std::span<const GainPoint> grid) {
  GainAuditReport rep;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double g = models::control_gain(model, grid[i].state, grid[i].u_kw, grid[i].w);
    ++rep.points;
    if (g < 0.0) ++rep.negative;
    if (g < rep.worst_gain) {
      rep.worst_gain = g;
      rep.worst_index = i;
    }
  }
  return rep;
}

}  // namespace pimodnn::evaluation
