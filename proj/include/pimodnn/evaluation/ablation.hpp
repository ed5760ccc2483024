#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "pimodnn/evaluation/metrics.hpp"
#include "pimodnn/evaluation/rolling.hpp"
#include "pimodnn/evaluation/trv.hpp"
#include "pimodnn/plant/telemetry_csv.hpp"
#include "pimodnn/training/trainer.hpp"
#include "pimodnn/training/variants.hpp"

namespace pimodnn::evaluation {

struct AblationConfig {
  std::vector<std::string> variants{training::kVariantNames.begin(), training::kVariantNames.end()};
  std::vector<int> days{7, 30, 90};
  int seeds = 5;
  std::uint64_t base_seed = 0;
  int test_days = 31;
  int jobs = 1;
  std::size_t rolling_stride = 1;
  std::vector<double> check_levels = kDefaultCheckLevels;
  double u_limit_kw = 5.0;
  models::ModelConfig model;
  training::TrainConfig train;
  int steps_per_day = 96;
};

struct AblationCell {
  std::string variant;
  int days = 0;
  int seed_index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double mae = 0.0;
  double trv_plus = 0.0;
  double trv_minus = 0.0;
  std::size_t rolling_count = 0;
  int best_epoch = 0;
  int stop_epoch = 0;
  double train_time_s = 0.0;

  [[nodiscard]] double trv_total() const { return trv_plus + trv_minus; }
};

struct Distribution {
  std::size_t n = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
  std::vector<double> values;

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"n", n}, {"median", median}, {"q1", q1}, {"q3", q3}, {"min", min}, {"max", max}, {"values", values}};
  }
};

/// Quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw InputError("quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline Distribution distribution_of(std::vector<double> v) {
  Distribution d;
  d.n = v.size();
  d.values = v;
  if (v.empty()) return d;
  d.median = quantile(v, 0.5);
  d.q1 = quantile(v, 0.25);
  d.q3 = quantile(v, 0.75);
  d.min = *std::min_element(v.begin(), v.end());
  d.max = *std::max_element(v.begin(), v.end());
  return d;
}

struct PriorPairing {
  const char* prior;
  const char* without;  // rule set s
  const char* with;     // s plus the prior
};

inline constexpr std::array<PriorPairing, 3> kPriorPairings{{{"structure", "LSTM", "PI-ModNN|LC"},
                                                             {"loss", "PI-ModNN|L", "PI-ModNN"},
                                                             {"constraints", "PI-ModNN|C", "PI-ModNN"}}};

struct RuleImportanceEntry {
  std::string prior, baseline, candidate, metric;
  int days = 0;  // 0 = pooled over all sizes
  double epsilon = kRuleImportanceEpsilon;
  std::vector<double> f_s, f_si;
  Distribution ri;

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"prior", prior},   {"baseline", baseline}, {"candidate", candidate}, {"metric", metric},
            {"days", days},     {"epsilon", epsilon},   {"f_s", f_s},             {"f_si", f_si},
            {"ri", ri.to_json()}};
  }
};

struct AblationResult {
  std::vector<AblationCell> cells;
  std::vector<RuleImportanceEntry> rule_importance;
  std::size_t test_origins = 0;

  [[nodiscard]] const AblationCell* find(const std::string& v, int days, int seed_index) const {
    for (const auto& c : cells)
      if (c.variant == v && c.days == days && c.seed_index == seed_index) return &c;
    return nullptr;
  }

  [[nodiscard]] const RuleImportanceEntry* ri(const std::string& prior, const std::string& metric, int days) const {
    for (const auto& e : rule_importance)
      if (e.prior == prior && e.metric == metric && e.days == days) return &e;
    return nullptr;
  }

  [[nodiscard]] nlohmann::json to_json(bool include_wall_time = true) const {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : cells) {
      nlohmann::json j = {{"variant", c.variant},       {"days", c.days},
                          {"seed_index", c.seed_index}, {"seed", c.seed},
                          {"ok", c.ok},                 {"mae_c", c.mae},
                          {"trv_plus", c.trv_plus},     {"trv_minus", c.trv_minus},
                          {"rolling_count", c.rolling_count}, {"best_epoch", c.best_epoch},
                          {"stop_epoch", c.stop_epoch}};
      if (!c.ok) j["error"] = c.error;
      if (include_wall_time) j["train_time_s"] = c.train_time_s;
      cs.push_back(j);
    }
    nlohmann::json ri = nlohmann::json::array();
    for (const auto& e : rule_importance) ri.push_back(e.to_json());
    return {{"schema_version", 1}, {"test_origins", test_origins}, {"cells", cs}, {"rule_importance", ri}};
  }

  void write_csv(std::ostream& os) const {
    os << "variant,days,seed,mae_c,trv_plus,trv_minus\n";
    for (const auto& c : cells) {
      os << c.variant << ',' << c.days << ',' << c.seed << ',';
      if (c.ok)
        os << plant::format_double(c.mae) << ',' << plant::format_double(c.trv_plus) << ','
           << plant::format_double(c.trv_minus) << '\n';
      else
        os << "nan,nan,nan\n";
    }
  }
};

/// Trains and scores one cell. Training uses the `days` days immediately before `test_start`.
inline AblationCell run_cell(std::span<const plant::TelemetryRecord> records, std::size_t test_start,
                             const AblationConfig& cfg, const std::string& variant, int days, int seed_index) {
  AblationCell c;
  c.variant = variant;
  c.days = days;
  c.seed_index = seed_index;
  c.seed = cfg.base_seed + static_cast<std::uint64_t>(seed_index);
  try {
    const std::size_t n_train = static_cast<std::size_t>(days * cfg.steps_per_day);
    if (n_train > test_start) throw InputError("ablation: not enough records before the test month");
    auto model = training::build_variant(variant, c.seed, cfg.model);
    auto rep = training::train(*model, records.subspan(test_start - n_train, n_train), cfg.train, c.seed, variant);
    c.best_epoch = rep.best_epoch;
    c.stop_epoch = rep.stop_epoch;
    c.train_time_s = rep.wall_time_s;
    const auto origins = static_cast<std::size_t>(cfg.test_days * cfg.steps_per_day) / cfg.rolling_stride;
    const auto roll = rolling_eval(*model, records, test_start, origins, cfg.rolling_stride);
    c.mae = roll.aggregate_mae;
    c.rolling_count = roll.count;
    const auto eps = daily_episodes(records, test_start, cfg.test_days, cfg.model.encoder_len, cfg.model.decoder_len,
                                    cfg.steps_per_day);
    const auto t = trv(*model, eps, cfg.check_levels, cfg.u_limit_kw);
    c.trv_plus = t.total_plus;
    c.trv_minus = t.total_minus;
    c.ok = true;
  } catch (const std::exception& e) {
    c.ok = false;
    c.error = e.what();
  }
  return c;
}

inline void assemble_rule_importance(AblationResult& res, const AblationConfig& cfg) {
  for (const auto& pr : kPriorPairings) {
    const bool have = std::find(cfg.variants.begin(), cfg.variants.end(), pr.without) != cfg.variants.end() &&
                      std::find(cfg.variants.begin(), cfg.variants.end(), pr.with) != cfg.variants.end();
    if (!have) continue;
    for (const char* metric : {"mae", "trv"}) {
      std::vector<int> sizes = cfg.days;
      sizes.push_back(0);
      for (int d : sizes) {
        RuleImportanceEntry e;
        e.prior = pr.prior;
        e.baseline = pr.without;
        e.candidate = pr.with;
        e.metric = metric;
        e.days = d;
        std::vector<double> ris;
        for (int dd : cfg.days) {
          if (d != 0 && dd != d) continue;
          for (int s = 0; s < cfg.seeds; ++s) {
            const auto* a = res.find(pr.without, dd, s);
            const auto* b = res.find(pr.with, dd, s);
            if (a == nullptr || b == nullptr || !a->ok || !b->ok) continue;
            const double fs = std::string(metric) == "mae" ? a->mae : a->trv_total();
            const double fsi = std::string(metric) == "mae" ? b->mae : b->trv_total();
            e.f_s.push_back(fs);
            e.f_si.push_back(fsi);
            ris.push_back(rule_importance(fs, fsi, e.epsilon));
          }
        }
        e.ri = distribution_of(ris);
        res.rule_importance.push_back(std::move(e));
      }
    }
  }
}

/// Full grid. `test_start` is the first record of the test month; records must extend
/// decoder_len past its end. Cells run on `cfg.jobs` worker threads; results are
/// stored by grid position, so the report does not depend on scheduling.
inline AblationResult run_ablation(std::span<const plant::TelemetryRecord> records, std::size_t test_start,
                                   const AblationConfig& cfg, std::ostream* log = nullptr) {
  if (cfg.seeds < 1 || cfg.days.empty() || cfg.variants.empty()) throw InputError("ablation: empty grid");
  for (const auto& v : cfg.variants) training::variant_flags(v);
  const int max_days = *std::max_element(cfg.days.begin(), cfg.days.end());
  if (test_start < static_cast<std::size_t>(max_days * cfg.steps_per_day))
    throw InputError("ablation: data before the test month covers fewer than " + std::to_string(max_days) + " days");
  const std::size_t need = test_start + static_cast<std::size_t>(cfg.test_days * cfg.steps_per_day + cfg.model.decoder_len);
  if (records.size() < need)
    throw InputError("ablation: need " + std::to_string(need) + " records, have " + std::to_string(records.size()));

  struct Job {
    std::string variant;
    int days;
    int seed;
  };
  std::vector<Job> jobs;
  for (int d : cfg.days)
    for (int s = 0; s < cfg.seeds; ++s)
      for (const auto& v : cfg.variants) jobs.push_back({v, d, s});
  AblationResult res;
  res.cells.resize(jobs.size());
  res.test_origins = static_cast<std::size_t>(cfg.test_days * cfg.steps_per_day) / cfg.rolling_stride;
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      res.cells[i] = run_cell(records, test_start, cfg, jobs[i].variant, jobs[i].days, jobs[i].seed);
      if (log != nullptr) {
        std::lock_guard<std::mutex> lk(log_mu);
        const auto& c = res.cells[i];
        *log << "[" << (i + 1) << "/" << jobs.size() << "] " << c.variant << " days=" << c.days << " seed=" << c.seed
             << (c.ok ? "" : " FAILED: " + c.error) << " mae=" << c.mae << " trv+=" << c.trv_plus
             << " trv-=" << c.trv_minus << '\n';
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(jobs.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  assemble_rule_importance(res, cfg);
  return res;
}

}  // namespace pimodnn::evaluation
