#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <span>
#include <vector>

#include "pimodnn/models/sequence.hpp"

namespace pimodnn::evaluation {

inline const std::vector<double> kDefaultCheckLevels{-4.0, -2.0, 0.0, 2.0, 4.0};

struct TrvLevel {
  double delta_kw = 0.0;
  double trv_plus = 0.0;    // degC*step
  double trv_minus = 0.0;   // degC*step
  std::vector<double> trace;  // per decoder step, summed over episodes
};

struct TrvReport {
  std::vector<TrvLevel> levels;
  double total_plus = 0.0;
  double total_minus = 0.0;
  std::size_t episodes = 0;

  [[nodiscard]] double total() const { return total_plus + total_minus; }

  [[nodiscard]] nlohmann::json to_json(bool include_trace = false) const {
    constexpr double kHoursPerStep = 0.25;
    nlohmann::json lv = nlohmann::json::array();
    for (const auto& l : levels) {
      nlohmann::json j = {{"delta_kw", l.delta_kw},
                          {"trv_plus_c_step", l.trv_plus},
                          {"trv_minus_c_step", l.trv_minus},
                          {"trv_plus_c_h", l.trv_plus * kHoursPerStep},
                          {"trv_minus_c_h", l.trv_minus * kHoursPerStep}};
      if (include_trace) j["trace"] = l.trace;
      lv.push_back(j);
    }
    return {{"episodes", episodes},
            {"levels", lv},
            {"total_plus_c_step", total_plus},
            {"total_minus_c_step", total_minus},
            {"total_plus_c_h", total_plus * kHoursPerStep},
            {"total_minus_c_h", total_minus * kHoursPerStep}};
  }
};

/// Violation accounting for one level. Extra cooling (delta < 0) must not raise the
/// temperature: positive excess goes to trv_plus. Extra heating (delta > 0) must not
/// lower it: the shortfall goes to trv_minus. delta == 0 must reproduce the reference
/// exactly, so any difference counts toward both.
inline void accumulate_violation(TrvLevel& lv, std::span<const double> t_pred, std::span<const double> t_check) {
  if (lv.trace.size() < t_pred.size()) lv.trace.resize(t_pred.size(), 0.0);
  for (std::size_t i = 0; i < t_pred.size(); ++i) {
    const double diff = t_check[i] - t_pred[i];
    double v = 0.0;
    if (lv.delta_kw < 0.0) {
      v = std::max(diff, 0.0);
      lv.trv_plus += v;
    } else if (lv.delta_kw > 0.0) {
      v = std::max(-diff, 0.0);
      lv.trv_minus += v;
    } else {
      v = std::abs(diff);
      lv.trv_plus += v;
      lv.trv_minus += v;
    }
    lv.trace[i] += v;
  }
}

/// Sanity check over reference episodes: constant offset delta on every planned control,
/// clipped to [-u_limit_kw, u_limit_kw] (widened to the original value, so clipping never
/// reverses the direction of the offset).
inline TrvReport trv(models::ThermalModel& model, std::span<const models::Episode> episodes,
                     std::span<const double> levels = kDefaultCheckLevels, double u_limit_kw = 5.0) {
  if (episodes.empty()) throw InputError("trv: no reference episodes");
  TrvReport rep;
  rep.episodes = episodes.size();
  const auto reference = models::predict_decoder(model, episodes);
  for (double delta : levels) {
    TrvLevel lv;
    lv.delta_kw = delta;
    std::vector<models::Episode> checked(episodes.begin(), episodes.end());
    for (auto& ep : checked)
      for (double& u : ep.planned_u) u = std::clamp(u + delta, std::min(-u_limit_kw, u), std::max(u_limit_kw, u));
    const auto check = models::predict_decoder(model, checked);
    for (Eigen::Index r = 0; r < reference.rows(); ++r) {
      std::vector<double> p(static_cast<std::size_t>(reference.cols())), c(p.size());
      for (Eigen::Index j = 0; j < reference.cols(); ++j) {
        p[static_cast<std::size_t>(j)] = reference(r, j);
        c[static_cast<std::size_t>(j)] = check(r, j);
      }
      accumulate_violation(lv, p, c);
    }
    rep.total_plus += lv.trv_plus;
    rep.total_minus += lv.trv_minus;
    rep.levels.push_back(std::move(lv));
  }
  return rep;
}

inline TrvReport trv(models::ThermalModel& model, const models::Episode& episode,
                     std::span<const double> levels = kDefaultCheckLevels, double u_limit_kw = 5.0) {
  return trv(model, std::span<const models::Episode>(&episode, 1), levels, u_limit_kw);
}

/// One reference episode per day: origins at first_origin + d * steps_per_day.
inline std::vector<models::Episode> daily_episodes(std::span<const plant::TelemetryRecord> records,
                                                   std::size_t first_origin, int days, int enc, int dec,
                                                   int steps_per_day = 96) {
  std::vector<models::Episode> out;
  for (int d = 0; d < days; ++d) {
    const std::size_t o = first_origin + static_cast<std::size_t>(d * steps_per_day);
    out.push_back(models::episode_at(records, o + 1 - static_cast<std::size_t>(enc), enc, dec));
  }
  return out;
}

}  // namespace pimodnn::evaluation
