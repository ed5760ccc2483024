#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pimodnn/numerics/errors.hpp"
#include "pimodnn/plant/plant.hpp"

namespace pimodnn::training {

/// Start indices of every gap-free window of enc + dec consecutive records, at `stride`.
/// A gap is any pair of neighbours whose timestamps are not exactly `dt_s` apart.
inline std::vector<std::size_t> make_windows(std::span<const plant::TelemetryRecord> records, int enc, int dec,
                                             int stride, std::int64_t dt_s = 900) {
  if (enc < 1 || dec < 1 || stride < 1) throw InputError("make_windows: enc, dec and stride must be >= 1");
  const std::size_t len = static_cast<std::size_t>(enc + dec);
  if (records.size() < len)
    throw InputError("make_windows: dataset has " + std::to_string(records.size()) + " records; at least " +
                     std::to_string(len) + " required");
  // run_start[i]: first index of the contiguous run containing record i
  std::vector<std::size_t> run_start(records.size(), 0);
  for (std::size_t i = 1; i < records.size(); ++i)
    run_start[i] = records[i].time - records[i - 1].time == dt_s ? run_start[i - 1] : i;
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s + len <= records.size(); s += static_cast<std::size_t>(stride))
    if (run_start[s + len - 1] <= s) out.push_back(s);
  return out;
}

struct WindowSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  /// Records before this index form the training period proper (normalization stats come from here).
  std::size_t boundary = 0;
};

/// Chronological split: the last `val_fraction` of the records is the validation period.
/// Training windows end at or before the boundary; validation windows forecast from a point
/// at or after it (their history may reach back into the training period).
inline WindowSplit split_windows(std::span<const std::size_t> starts, std::size_t n_records, int enc, int dec,
                                 double val_fraction = 0.2) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InputError("split_windows: val_fraction must be in (0, 1)");
  WindowSplit w;
  w.boundary = static_cast<std::size_t>(static_cast<double>(n_records) * (1.0 - val_fraction));
  const std::size_t e = static_cast<std::size_t>(enc), d = static_cast<std::size_t>(dec);
  for (std::size_t s : starts) {
    if (s + e + d <= w.boundary) w.train.push_back(s);
    else if (s + e >= w.boundary) w.validation.push_back(s);
  }
  return w;
}

}  // namespace pimodnn::training
