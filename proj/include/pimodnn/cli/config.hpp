#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pimodnn/control/agent_training.hpp"
#include "pimodnn/control/baseline.hpp"
#include "pimodnn/control/env.hpp"
#include "pimodnn/control/sac.hpp"
#include "pimodnn/evaluation/trv.hpp"
#include "pimodnn/models/config.hpp"
#include "pimodnn/plant/dataset.hpp"
#include "pimodnn/training/trainer.hpp"
#include "pimodnn/training/variants.hpp"

namespace pimodnn::cli {

using nlohmann::json;

/// Key -> member binding for one flat config section. Loading rejects unknown keys.
class FieldTable {
 public:
  explicit FieldTable(std::string section) : section_(std::move(section)) {}

  template <class T>
  FieldTable& bind(const std::string& key, T& ref) {
    order_.push_back(key);
    get_[key] = [&ref] { return json(ref); };
    set_[key] = [&ref](const json& v) { ref = v.template get<T>(); };
    return *this;
  }

  FieldTable& bind_custom(const std::string& key, std::function<json()> get, std::function<void(const json&)> set) {
    order_.push_back(key);
    get_[key] = std::move(get);
    set_[key] = std::move(set);
    return *this;
  }

  [[nodiscard]] json dump() const {
    json j = json::object();
    for (const auto& k : order_) j[k] = get_.at(k)();
    return j;
  }

  void load(const json& j) const {
    if (!j.is_object()) throw InputError("config: section '" + section_ + "' must be an object");
    for (const auto& [k, v] : j.items()) {
      auto it = set_.find(k);
      if (it == set_.end()) throw InputError("config: unknown key '" + section_ + "." + k + "'");
      try {
        it->second(v);
      } catch (const nlohmann::json::exception&) {
        throw InputError("config: bad value for '" + section_ + "." + k + "'");
      }
    }
  }

 private:
  std::string section_;
  std::vector<std::string> order_;
  std::map<std::string, std::function<json()>> get_;
  std::map<std::string, std::function<void(const json&)>> set_;
};

struct EvaluationSection {
  int test_start_day = 90;  // first day of the test month, counted from the data start
  int test_days = 31;
  std::vector<double> check_levels = evaluation::kDefaultCheckLevels;
  double u_limit_kw = 5.0;
  std::size_t rolling_stride = 1;
  std::vector<int> ablation_days{7, 30, 90};
  int ablation_seeds = 5;
  std::vector<std::string> variants{training::kVariantNames.begin(), training::kVariantNames.end()};
  int jobs = 1;
  double mae_threshold_c = 0.5;  // gate step 1
  int gain_points_per_day = 20;
};

struct ControlSection {
  control::SacConfig sac;
  control::RewardWeights reward;
  control::ActionBounds action;
  control::ComfortBounds comfort;
  control::BaselineParams baseline;
  control::PlantEnvConfig plant_env;
  int eval_days = 14;
  std::uint64_t eval_seed = 1000;
  int hybrid_episodes = 0;
};

struct IoSection {
  std::string out_dir = "runs";
  std::string data_csv;  // empty: generate from the plant section
};

struct RunConfig {
  std::uint64_t seed = 0;
  plant::DatasetSpec data;
  models::ModelConfig model;
  training::TrainConfig train;
  int train_days = 30;
  EvaluationSection eval;
  ControlSection control;
  IoSection io;

  RunConfig() {
    data.days = 122;
    data.weather.start = plant::make_timestamp(2024, 5, 1);
    control.plant_env.start_day_spread = 14;  // warm-up plus a 14-day evaluation stays inside the test month
  }

  [[nodiscard]] control::EnvConfig env_config() const {
    control::EnvConfig e;
    e.action_bounds = control.action;
    e.comfort_bounds = control.comfort;
    e.weights = control.reward;
    e.episode_steps = control.sac.episode_steps;
    return e;
  }

  [[nodiscard]] std::size_t test_start() const { return static_cast<std::size_t>(eval.test_start_day) * 96; }

  void validate() const {
    model.validate();
    data.plant.validate();
    control.sac.validate();
    control.action.validate();
    control.comfort.validate();
    control.reward.validate();
    if (train_days < 1) throw InputError("config: training.train_days must be >= 1");
    if (train_days > eval.test_start_day) throw InputError("config: training.train_days exceeds evaluation.test_start_day");
    if (eval.test_days < 1) throw InputError("config: evaluation.test_days must be >= 1");
    if (data.days < eval.test_start_day + eval.test_days + 1)
      throw InputError("config: plant.days must cover test_start_day + test_days + 1 (decoder tail)");
    if (eval.rolling_stride < 1) throw InputError("config: evaluation.rolling_stride must be >= 1");
    if (eval.jobs < 1) throw InputError("config: evaluation.jobs must be >= 1");
    for (const auto& v : eval.variants) training::variant_flags(v);
    for (int d : eval.ablation_days)
      if (d < 1 || d > eval.test_start_day) throw InputError("config: ablation_days must lie in [1, test_start_day]");
    if (control.eval_days < 1) throw InputError("config: control.eval_days must be >= 1");
    if (control.hybrid_episodes < 0) throw InputError("config: control.hybrid_episodes must be >= 0");
  }
};

namespace detail {

inline json range_json(const control::Range& r) { return {r.lo, r.hi}; }
inline control::Range range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InputError("config: ranges are [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline std::string schedule_name(training::PhaseSchedule s) {
  return s == training::PhaseSchedule::Interleaved ? "interleaved" : "sequential";
}
inline training::PhaseSchedule schedule_from(const std::string& s) {
  if (s == "interleaved") return training::PhaseSchedule::Interleaved;
  if (s == "sequential") return training::PhaseSchedule::Sequential;
  throw InputError("config: training.schedule must be 'interleaved' or 'sequential'");
}

inline FieldTable plant_table(RunConfig& c) {
  FieldTable t("plant");
  auto& p = c.data.plant;
  auto& w = c.data.weather;
  auto& x = c.data.excitation;
  t.bind("days", c.data.days).bind("data_seed", c.data.seed);
  t.bind("c_zone", p.c_zone).bind("c_mass", p.c_mass).bind("r_mass_zone", p.r_mass_zone);
  t.bind("r_out_zone", p.r_out_zone).bind("r_out_mass", p.r_out_mass).bind("solar_aperture", p.solar_aperture);
  t.bind("occupant_gain", p.occupant_gain).bind("noise_sigma", p.noise_sigma).bind("dt", p.dt);
  t.bind("initial_t_zone", c.data.initial.t_zone).bind("initial_t_mass", c.data.initial.t_mass);
  t.bind_custom(
      "weather_start", [&w] { return json(plant::format_iso8601(w.start)); },
      [&w](const json& v) { w.start = plant::parse_iso8601(v.get<std::string>()); });
  t.bind("annual_mean_c", w.annual_mean_c).bind("annual_amplitude_c", w.annual_amplitude_c);
  t.bind("warmest_day_of_year", w.warmest_day_of_year).bind("diurnal_amplitude_c", w.diurnal_amplitude_c);
  t.bind("weather_noise_c", w.noise_sigma_c).bind("weather_memory", w.noise_memory);
  t.bind("solar_peak_wm2", w.solar_peak_wm2).bind("occupancy_max", w.occupancy_max);
  t.bind("occupied_from_h", w.occupied_from_h).bind("occupied_to_h", w.occupied_to_h);
  t.bind("excitation_max_load_kw", x.max_load_kw).bind("excitation_setpoint_low_c", x.setpoint_low_c);
  t.bind("excitation_setpoint_high_c", x.setpoint_high_c).bind("excitation_gain_kw_per_k", x.gain_kw_per_k);
  t.bind("excitation_p_free_float", x.p_free_float).bind("excitation_p_level", x.p_level);
  t.bind("excitation_block_min_steps", x.block_min_steps).bind("excitation_block_max_steps", x.block_max_steps);
  return t;
}

inline FieldTable training_table(RunConfig& c) {
  FieldTable t("training");
  auto& tr = c.train;
  t.bind("epochs", tr.epochs).bind("patience", tr.patience).bind("lr", tr.lr).bind("batch_size", tr.batch_size);
  t.bind("p_mix", tr.p_mix).bind("stride", tr.stride).bind("val_fraction", tr.val_fraction);
  t.bind("encoder_epochs", tr.encoder_epochs).bind("train_days", c.train_days);
  t.bind_custom(
      "schedule", [&tr] { return json(schedule_name(tr.schedule)); },
      [&tr](const json& v) { tr.schedule = schedule_from(v.get<std::string>()); });
  return t;
}

inline FieldTable evaluation_table(RunConfig& c) {
  FieldTable t("evaluation");
  auto& e = c.eval;
  t.bind("test_start_day", e.test_start_day).bind("test_days", e.test_days).bind("check_levels", e.check_levels);
  t.bind("u_limit_kw", e.u_limit_kw).bind("rolling_stride", e.rolling_stride).bind("ablation_days", e.ablation_days);
  t.bind("ablation_seeds", e.ablation_seeds).bind("variants", e.variants).bind("jobs", e.jobs);
  t.bind("mae_threshold_c", e.mae_threshold_c).bind("gain_points_per_day", e.gain_points_per_day);
  return t;
}

inline FieldTable reward_table(control::RewardWeights& w) {
  FieldTable t("control.reward");
  t.bind("r1_comfort", w.comfort).bind("r2_q_sup", w.action_q_sup).bind("r2_q_out", w.action_q_out);
  t.bind("r2_t_sup", w.action_t_sup).bind("r3_energy", w.energy).bind("r4_airflow", w.airflow);
  t.bind("r5_comfort_bonus", w.comfort_bonus).bind("r6_smoothness", w.smoothness);
  return t;
}

inline FieldTable control_table(RunConfig& c) {
  FieldTable t("control");
  auto& k = c.control;
  auto range = [&t](const std::string& key, control::Range& r) {
    t.bind_custom(key, [&r] { return range_json(r); }, [&r](const json& v) { r = range_from(v); });
  };
  t.bind_custom(
      "sac", [&k] { return control::sac_config_to_json(k.sac); },
      [&k](const json& v) { k.sac = control::sac_config_from_json(v, k.sac); });
  t.bind_custom(
      "reward", [&k] { return reward_table(k.reward).dump(); }, [&k](const json& v) { reward_table(k.reward).load(v); });
  range("q_sup_occupied", k.action.q_sup_occupied);
  range("q_sup_unoccupied", k.action.q_sup_unoccupied);
  range("t_sup", k.action.t_sup);
  range("comfort_occupied", k.comfort.occupied);
  range("comfort_unoccupied", k.comfort.unoccupied);
  t.bind("occupied_start_h", k.action.schedule.occupied_start_h).bind("occupied_end_h", k.action.schedule.occupied_end_h);
  t.bind("baseline_oa_fraction", k.baseline.oa_fraction).bind("baseline_setpoint_margin_c", k.baseline.setpoint_margin_c);
  t.bind("baseline_proportional_band_c", k.baseline.proportional_band_c).bind("baseline_prestart_h", k.baseline.prestart_h);
  t.bind("eval_days", k.eval_days).bind("eval_seed", k.eval_seed).bind("hybrid_episodes", k.hybrid_episodes);
  t.bind("plant_warmup_days", k.plant_env.warmup_days).bind("plant_start_day_spread", k.plant_env.start_day_spread);
  return t;
}

inline FieldTable io_table(RunConfig& c) {
  FieldTable t("io");
  t.bind("out_dir", c.io.out_dir).bind("data_csv", c.io.data_csv);
  return t;
}

}  // namespace detail

inline json config_to_json(const RunConfig& cfg) {
  RunConfig c = cfg;
  return {{"schema_version", 1},
          {"seed", c.seed},
          {"plant", detail::plant_table(c).dump()},
          {"model", models::model_config_to_json(c.model)},
          {"training", detail::training_table(c).dump()},
          {"evaluation", detail::evaluation_table(c).dump()},
          {"control", detail::control_table(c).dump()},
          {"io", detail::io_table(c).dump()}};
}

/// Keys present in `j` override the defaults; unknown keys anywhere are rejected.
inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw InputError("config: top level must be an object");
  RunConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "schema_version") {
      if (v != 1) throw InputError("config: unsupported schema_version");
    } else if (k == "seed") {
      c.seed = v.get<std::uint64_t>();
    } else if (k == "plant") {
      detail::plant_table(c).load(v);
    } else if (k == "model") {
      c.model = models::model_config_from_json(v, c.model);
    } else if (k == "training") {
      detail::training_table(c).load(v);
    } else if (k == "evaluation") {
      detail::evaluation_table(c).load(v);
    } else if (k == "control") {
      detail::control_table(c).load(v);
    } else if (k == "io") {
      detail::io_table(c).load(v);
    } else {
      throw InputError("config: unknown section '" + k + "'");
    }
  }
  // keep the env schedule and the comfort schedule in step
  c.control.comfort.schedule = c.control.action.schedule;
  c.control.plant_env.plant = c.data.plant;
  // the plant used for agent evaluation sees weather from the test season
  c.control.plant_env.weather = c.data.weather;
  c.control.plant_env.weather.start += static_cast<plant::Timestamp>(c.eval.test_start_day) * plant::kSecondsPerDay;
  c.validate();
  return c;
}

/// Value text is parsed as JSON when possible, otherwise taken as a string.
inline json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

/// Applies `section.key=value` (keys may nest, e.g. control.sac.batch=256).
inline RunConfig apply_overrides(const RunConfig& base, const std::vector<std::string>& sets) {
  json j = config_to_json(base);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--set expects section.key=value, got '" + s + "'");
    const std::string path = s.substr(0, eq);
    json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (part.empty()) throw InputError("--set: empty path component in '" + path + "'");
      if (dot == std::string::npos) {
        if (!node->is_object() || !node->contains(part)) throw InputError("--set: unknown key '" + path + "'");
        (*node)[part] = parse_override_value(s.substr(eq + 1));
        break;
      }
      if (!node->is_object() || !node->contains(part)) throw InputError("--set: unknown key '" + path + "'");
      node = &(*node)[part];
      start = dot + 1;
    }
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw InputError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

inline RunConfig default_config() {
  return config_from_json(json::object());
}

}  // namespace pimodnn::cli
