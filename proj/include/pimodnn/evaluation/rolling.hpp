#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <span>
#include <vector>

#include "pimodnn/models/sequence.hpp"

namespace pimodnn::evaluation {

struct RollingReport {
  std::size_t count = 0;                 // number of forecast origins scored
  std::vector<double> horizon_mae;       // MAE per decoder step
  std::vector<double> window_mae;        // MAE per origin
  double aggregate_mae = 0.0;

  [[nodiscard]] nlohmann::json to_json(bool include_windows = false) const {
    nlohmann::json j = {{"count", count}, {"aggregate_mae_c", aggregate_mae}, {"horizon_mae_c", horizon_mae}};
    if (include_windows) j["window_mae_c"] = window_mae;
    return j;
  }
};

/// Forecast origins are records[first_origin + i * stride] for i < n_origins. Each origin
/// needs encoder_len - 1 records before it and decoder_len records after it.
inline RollingReport rolling_eval(models::ThermalModel& model, std::span<const plant::TelemetryRecord> records,
                                  std::size_t first_origin, std::size_t n_origins, std::size_t stride = 1,
                                  std::size_t batch = 256) {
  const int enc = model.config().encoder_len, dec = model.config().decoder_len;
  if (stride < 1 || n_origins < 1) throw InputError("rolling_eval: need stride >= 1 and at least one origin");
  if (first_origin + 1 < static_cast<std::size_t>(enc))
    throw InputError("rolling_eval: first origin leaves fewer than encoder_len history records");
  const std::size_t last = first_origin + (n_origins - 1) * stride;
  if (last + static_cast<std::size_t>(dec) >= records.size())
    throw InputError("rolling_eval: test set needs " + std::to_string(last + dec + 1) + " records, have " +
                     std::to_string(records.size()));
  RollingReport rep;
  rep.count = n_origins;
  rep.horizon_mae.assign(static_cast<std::size_t>(dec), 0.0);
  rep.window_mae.reserve(n_origins);
  std::vector<models::Episode> eps;
  for (std::size_t i0 = 0; i0 < n_origins; i0 += batch) {
    const std::size_t cnt = std::min(batch, n_origins - i0);
    eps.clear();
    for (std::size_t i = i0; i < i0 + cnt; ++i)
      eps.push_back(models::episode_at(records, first_origin + i * stride + 1 - static_cast<std::size_t>(enc), enc, dec));
    const models::Tensor2 pred = models::predict_decoder(model, eps);
    for (std::size_t r = 0; r < cnt; ++r) {
      double s = 0.0;
      for (int j = 0; j < dec; ++j) {
        const double e = std::abs(pred(static_cast<Eigen::Index>(r), j) - eps[r].target[static_cast<std::size_t>(j)]);
        rep.horizon_mae[static_cast<std::size_t>(j)] += e;
        s += e;
      }
      rep.window_mae.push_back(s / dec);
    }
  }
  double agg = 0.0;
  for (double& h : rep.horizon_mae) {
    h /= static_cast<double>(n_origins);
    agg += h;
  }
  rep.aggregate_mae = agg / dec;
  return rep;
}

}  // namespace pimodnn::evaluation
