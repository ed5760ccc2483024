#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pimodnn/cli/config.hpp"
#include "pimodnn/cli/plot.hpp"
#include "pimodnn/control/agent_training.hpp"
#include "pimodnn/control/env.hpp"
#include "pimodnn/control/evaluate.hpp"
#include "pimodnn/control/sac.hpp"
#include "pimodnn/evaluation/ablation.hpp"
#include "pimodnn/evaluation/gain_audit.hpp"
#include "pimodnn/evaluation/rolling.hpp"
#include "pimodnn/evaluation/trv.hpp"
#include "pimodnn/models/checkpoint.hpp"
#include "pimodnn/plant/dataset.hpp"
#include "pimodnn/plant/telemetry_csv.hpp"
#include "pimodnn/training/trainer.hpp"
#include "pimodnn/training/variants.hpp"

namespace pimodnn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kInputError = 2, kGateFail = 3, kDivergence = 4 };

/// Where a command writes. `dir` is created on first use.
struct RunContext {
  RunConfig cfg;
  fs::path dir;
  std::ostream* out = nullptr;

  void say(const std::string& s) const {
    if (out != nullptr) *out << s << '\n';
  }
};

/// <out_dir>/<command>-<UTC yyyymmddThhmmss>, with a numeric suffix on collision.
inline fs::path timestamped_run_dir(const fs::path& out_dir, const std::string& command) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << command << '-' << std::put_time(&tm, "%Y%m%dT%H%M%S");
  fs::path p = out_dir / os.str();
  for (int i = 1; fs::exists(p); ++i) p = out_dir / (os.str() + "-" + std::to_string(i));
  return p;
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InputError("cannot write '" + p.string() + "'");
  f << text;
}

inline void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline json read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw InputError("cannot open '" + p.string() + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw InputError("'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

/// Creates the run directory and copies the resolved config into it.
inline void open_run(RunContext& ctx) {
  fs::create_directories(ctx.dir);
  write_json(ctx.dir / "config.json", config_to_json(ctx.cfg));
}

inline std::vector<plant::TelemetryRecord> load_records(const RunConfig& cfg) {
  std::vector<plant::TelemetryRecord> r =
      cfg.io.data_csv.empty() ? plant::generate_dataset(cfg.data).records : plant::read_telemetry_csv(cfg.io.data_csv);
  const std::size_t need =
      cfg.test_start() + static_cast<std::size_t>(cfg.eval.test_days) * 96 + static_cast<std::size_t>(cfg.model.decoder_len);
  if (r.size() < need)
    throw InputError("data: need " + std::to_string(need) + " records for the test month, have " +
                     std::to_string(r.size()));
  return r;
}

/// The `train_days` days immediately before the test month.
inline std::span<const plant::TelemetryRecord> training_slice(const RunConfig& cfg,
                                                              const std::vector<plant::TelemetryRecord>& r) {
  const std::size_t n = static_cast<std::size_t>(cfg.train_days) * 96;
  return std::span<const plant::TelemetryRecord>(r).subspan(cfg.test_start() - n, n);
}

inline models::LoadedModel require_model(const std::string& path) {
  if (path.empty()) throw InputError("a model checkpoint is required (--model)");
  if (!fs::exists(path)) throw InputError("model checkpoint '" + path + "' does not exist");
  return models::load_checkpoint(path);
}

inline evaluation::AblationConfig ablation_config(const RunConfig& c) {
  evaluation::AblationConfig a;
  a.variants = c.eval.variants;
  a.days = c.eval.ablation_days;
  a.seeds = c.eval.ablation_seeds;
  a.base_seed = c.seed;
  a.test_days = c.eval.test_days;
  a.jobs = c.eval.jobs;
  a.rolling_stride = c.eval.rolling_stride;
  a.check_levels = c.eval.check_levels;
  a.u_limit_kw = c.eval.u_limit_kw;
  a.model = c.model;
  a.train = c.train;
  return a;
}

// ---- data / model commands ----

inline int cmd_gen_data(RunContext& ctx) {
  open_run(ctx);
  const auto sim = plant::generate_dataset(ctx.cfg.data);
  plant::write_telemetry_csv((ctx.dir / "telemetry.csv").string(), sim.records);
  write_json(ctx.dir / "data_summary.json",
             {{"schema_version", 1},
              {"records", sim.records.size()},
              {"days", ctx.cfg.data.days},
              {"first", plant::format_iso8601(sim.records.front().time)},
              {"last", plant::format_iso8601(sim.records.back().time)}});
  ctx.say("wrote " + std::to_string(sim.records.size()) + " records to " + (ctx.dir / "telemetry.csv").string());
  return kOk;
}

inline int cmd_train(RunContext& ctx, const std::string& variant) {
  training::variant_flags(variant);
  open_run(ctx);
  const auto rec = load_records(ctx.cfg);
  auto model = training::build_variant(variant, ctx.cfg.seed, ctx.cfg.model);
  auto tc = ctx.cfg.train;
  tc.log = ctx.out;
  const auto rep = training::train(*model, training_slice(ctx.cfg, rec), tc, ctx.cfg.seed, variant);
  models::save_checkpoint((ctx.dir / "model.json").string(), *model, variant);
  write_json(ctx.dir / "train_report.json", rep.to_json(false));
  write_json(ctx.dir / "timing.json", {{"wall_time_s", rep.wall_time_s}});
  std::ostringstream os;
  os << variant << ": best epoch " << rep.best_epoch << ", validation loss " << rep.best_val << ", checkpoint "
     << (ctx.dir / "model.json").string();
  ctx.say(os.str());
  return kOk;
}

inline evaluation::RollingReport rolling_for(const RunConfig& cfg, models::ThermalModel& m,
                                            const std::vector<plant::TelemetryRecord>& rec) {
  const auto origins = static_cast<std::size_t>(cfg.eval.test_days) * 96 / cfg.eval.rolling_stride;
  return evaluation::rolling_eval(m, rec, cfg.test_start(), origins, cfg.eval.rolling_stride);
}

inline evaluation::TrvReport trv_for(const RunConfig& cfg, models::ThermalModel& m,
                                    const std::vector<plant::TelemetryRecord>& rec) {
  const auto eps = evaluation::daily_episodes(rec, cfg.test_start(), cfg.eval.test_days, m.config().encoder_len,
                                              m.config().decoder_len);
  return evaluation::trv(m, eps, cfg.eval.check_levels, cfg.eval.u_limit_kw);
}

inline int cmd_eval(RunContext& ctx, const std::string& model_path) {
  auto lm = require_model(model_path);
  open_run(ctx);
  const auto rec = load_records(ctx.cfg);
  const auto roll = rolling_for(ctx.cfg, *lm.model, rec);
  json j = roll.to_json();
  j["schema_version"] = 1;
  j["variant"] = lm.variant;
  write_json(ctx.dir / "eval_report.json", j);
  std::ostringstream os;
  os << lm.variant << ": rolling MAE " << roll.aggregate_mae << " degC over " << roll.count << " origins";
  ctx.say(os.str());
  return kOk;
}

inline int cmd_trv(RunContext& ctx, const std::string& model_path) {
  auto lm = require_model(model_path);
  open_run(ctx);
  const auto rec = load_records(ctx.cfg);
  const auto t = trv_for(ctx.cfg, *lm.model, rec);
  json j = t.to_json();
  j["schema_version"] = 1;
  j["variant"] = lm.variant;
  write_json(ctx.dir / "trv_report.json", j);
  std::ostringstream os;
  os << lm.variant << ": TRV+ " << t.total_plus << ", TRV- " << t.total_minus << " (degC*step, " << t.episodes
     << " episodes)";
  ctx.say(os.str());
  return kOk;
}

inline int cmd_ablate(RunContext& ctx) {
  open_run(ctx);
  const auto rec = load_records(ctx.cfg);
  const auto res = evaluation::run_ablation(rec, ctx.cfg.test_start(), ablation_config(ctx.cfg), ctx.out);
  write_json(ctx.dir / "ablation.json", res.to_json(false));
  json timing = json::array();
  for (const auto& c : res.cells) timing.push_back({{"variant", c.variant}, {"days", c.days}, {"seed", c.seed}, {"train_time_s", c.train_time_s}});
  write_json(ctx.dir / "timing.json", timing);
  std::ostringstream csv;
  res.write_csv(csv);
  write_text(ctx.dir / "ablation.csv", csv.str());
  for (const auto& e : res.rule_importance)
    if (e.days == 0 && e.ri.n > 0) {
      std::ostringstream os;
      os << "RI " << e.prior << " on " << e.metric << ": median " << e.ri.median << " (n=" << e.ri.n << ")";
      ctx.say(os.str());
    }
  return kOk;
}

// ---- gate ----

struct GateStep {
  std::string name;
  std::string status;  // PASS, FAIL, SKIPPED
  std::string reason;
  json details = json::object();
};

struct GateVerdict {
  std::vector<GateStep> steps;
  [[nodiscard]] bool passed() const {
    for (const auto& s : steps)
      if (s.status == "FAIL") return false;
    return true;
  }
  [[nodiscard]] json to_json() const {
    json st = json::array();
    for (const auto& s : steps)
      st.push_back({{"step", s.name}, {"status", s.status}, {"reason", s.reason}, {"details", s.details}});
    return {{"schema_version", 1}, {"passed", passed()}, {"steps", st}};
  }
};

/// Priors missing from a model, in the order they should be added. Optional ablation
/// results attach the measured rule importance on TRV for each.
inline json prior_recommendations(const models::ThermalModel& m, const json* ablation) {
  const auto& f = m.config().flags;
  json recs = json::array();
  auto add = [&](const std::string& prior, const std::string& why) {
    json r = {{"prior", prior}, {"why", why}};
    if (ablation != nullptr && ablation->contains("rule_importance"))
      for (const auto& e : ablation->at("rule_importance"))
        if (e.at("prior") == prior && e.at("metric") == "trv" && e.at("days") == 0)
          r["ri_trv_median"] = e.at("ri").at("median");
    recs.push_back(r);
  };
  if (m.kind() != "pi-modnn" || !f.physics_structure)
    add("structure", "separate the HVAC path from the disturbance path so the control gain can be constrained");
  if (!f.hard_constraints || m.kind() != "pi-modnn")
    add("constraints", "keep the HVAC-path weights non-negative so more heating can never lower the prediction");
  if (recs.empty()) add("constraints", "model claims constraints but violated them; check the checkpoint");
  return recs;
}

inline GateVerdict run_gate(const RunConfig& cfg, models::ThermalModel& m, const std::vector<plant::TelemetryRecord>& rec,
                            const json* ablation = nullptr) {
  GateVerdict v;
  {
    GateStep s{"accuracy", "", "", json::object()};
    const auto roll = rolling_for(cfg, m, rec);
    s.details = roll.to_json();
    const bool ok = std::isfinite(roll.aggregate_mae) && roll.aggregate_mae <= cfg.eval.mae_threshold_c;
    s.status = ok ? "PASS" : "FAIL";
    std::ostringstream os;
    os << "rolling MAE " << roll.aggregate_mae << " degC " << (ok ? "<=" : ">") << " threshold "
       << cfg.eval.mae_threshold_c;
    s.reason = os.str();
    v.steps.push_back(s);
  }
  bool consistent = true;
  {
    GateStep s{"consistency", "", "", json::object()};
    const auto eps = evaluation::daily_episodes(rec, cfg.test_start(), cfg.eval.test_days, m.config().encoder_len,
                                                m.config().decoder_len);
    const auto grid = evaluation::gain_grid(m, eps, static_cast<std::size_t>(cfg.eval.gain_points_per_day),
                                            cfg.seed ^ 0x6A7EULL, cfg.eval.u_limit_kw);
    const auto audit = evaluation::gain_sign_audit(m, grid);
    const auto t = evaluation::trv(m, eps, cfg.eval.check_levels, cfg.eval.u_limit_kw);
    s.details = {{"gain_audit", audit.to_json()}, {"trv", t.to_json()}};
    consistent = audit.negative == 0 && t.total() == 0.0;
    s.status = consistent ? "PASS" : "FAIL";
    std::ostringstream os;
    os << audit.negative << " of " << audit.points << " gain samples negative; TRV+ " << t.total_plus << ", TRV- "
       << t.total_minus;
    s.reason = os.str();
    v.steps.push_back(s);
  }
  {
    GateStep s{"prior_guidance", "SKIPPED", "consistency passed", json::object()};
    if (!consistent) {
      const auto recs = prior_recommendations(m, ablation);
      s.status = "FAIL";
      std::string names;
      for (const auto& r : recs) names += (names.empty() ? "" : ", ") + r.at("prior").get<std::string>();
      s.reason = "add prior: " + names;
      s.details = {{"recommendations", recs}};
    }
    v.steps.push_back(s);
  }
  {
    GateStep s{"control_readiness", "", "", json::object()};
    try {
      auto ecfg = cfg.env_config();
      control::ModelEnv env(m, std::vector<plant::TelemetryRecord>(training_slice(cfg, rec).begin(),
                                                                  training_slice(cfg, rec).end()),
                            ecfg);
      env.reset(cfg.seed);
      double lo = 1e9, hi = -1e9, ret = 0.0;
      int n = 0;
      while (!env.done()) {
        const auto r = env.step(env.baseline_action(cfg.control.baseline));
        if (!std::isfinite(r.t_zone) || !std::isfinite(r.reward)) throw NumericalDivergence("non-finite rollout");
        lo = std::min(lo, r.t_zone);
        hi = std::max(hi, r.t_zone);
        ret += r.reward;
        ++n;
      }
      const bool plausible = lo > -10.0 && hi < 50.0;
      s.status = plausible ? "PASS" : "FAIL";
      std::ostringstream os;
      os << n << "-step baseline rollout, zone " << lo << " to " << hi << " degC";
      s.reason = plausible ? os.str() : os.str() + " (outside -10..50 degC)";
      s.details = {{"steps", n}, {"t_zone_min", lo}, {"t_zone_max", hi}, {"return", ret}};
    } catch (const std::exception& e) {
      s.status = "FAIL";
      s.reason = std::string("rollout failed: ") + e.what();
    }
    v.steps.push_back(s);
  }
  return v;
}

inline int cmd_gate(RunContext& ctx, const std::string& model_path, const std::string& ablation_path = "") {
  auto lm = require_model(model_path);
  json abl;
  if (!ablation_path.empty()) abl = read_json(ablation_path);
  open_run(ctx);
  const auto rec = load_records(ctx.cfg);
  const auto v = run_gate(ctx.cfg, *lm.model, rec, ablation_path.empty() ? nullptr : &abl);
  json j = v.to_json();
  j["variant"] = lm.variant;
  write_json(ctx.dir / "gate.json", j);
  for (std::size_t i = 0; i < v.steps.size(); ++i)
    ctx.say("step " + std::to_string(i + 1) + " " + v.steps[i].name + ": " + v.steps[i].status + " - " +
            v.steps[i].reason);
  ctx.say(v.passed() ? "gate PASS" : "gate FAIL");
  return v.passed() ? kOk : kGateFail;
}

// ---- agent ----

inline int cmd_train_agent(RunContext& ctx, const std::string& env_model_path) {
  auto lm = require_model(env_model_path);
  open_run(ctx);
  const auto rec = load_records(ctx.cfg);
  const auto slice = training_slice(ctx.cfg, rec);
  const auto ecfg = ctx.cfg.env_config();
  control::ModelEnv env(*lm.model, std::vector<plant::TelemetryRecord>(slice.begin(), slice.end()), ecfg);
  control::PlantEnv hybrid(ctx.cfg.control.plant_env, ecfg);
  control::SacAgent agent(control::kObsDim, control::kActionDim, ctx.cfg.control.sac, ctx.cfg.seed);
  control::AgentTrainOptions opt;
  opt.seed = ctx.cfg.seed;
  opt.hybrid_env = &hybrid;
  opt.hybrid_episodes = ctx.cfg.control.hybrid_episodes;
  opt.log = ctx.out;
  const auto rep = control::train_agent(agent, env, opt);
  write_json(ctx.dir / "agent.json", agent.to_json());
  write_json(ctx.dir / "agent_train_report.json", rep.to_json(false));
  write_json(ctx.dir / "timing.json", {{"wall_time_s", rep.wall_time_s}});
  std::ostringstream csv;
  rep.write_curve_csv(csv);
  write_text(ctx.dir / "learning_curve.csv", csv.str());
  ctx.say("trained " + std::to_string(rep.episodes.size()) + " episodes; agent " + (ctx.dir / "agent.json").string());
  return kOk;
}

struct PairedReport {
  control::PolicyReport baseline, agent;
  [[nodiscard]] double energy_reduction() const {
    return baseline.energy_kwh > 0.0 ? 1.0 - agent.energy_kwh / baseline.energy_kwh : 0.0;
  }
  [[nodiscard]] json to_json() const {
    return {{"schema_version", 1},
            {"baseline", baseline.to_json()},
            {"agent", agent.to_json()},
            {"energy_reduction", energy_reduction()}};
  }
};

inline PairedReport paired_evaluation(const RunConfig& cfg, control::SacAgent& agent, bool keep_trace) {
  PairedReport p;
  const auto ecfg = cfg.env_config();
  p.baseline = control::evaluate_policy(control::baseline_policy(cfg.control.baseline), cfg.control.plant_env, ecfg,
                                        cfg.control.eval_days, cfg.control.eval_seed, keep_trace);
  p.agent = control::evaluate_policy(control::agent_policy(agent), cfg.control.plant_env, ecfg, cfg.control.eval_days,
                                     cfg.control.eval_seed, keep_trace);
  return p;
}

inline int cmd_eval_agent(RunContext& ctx, const std::string& agent_path) {
  if (agent_path.empty()) throw InputError("an agent checkpoint is required (--agent)");
  auto agent = control::SacAgent::from_json(read_json(agent_path));
  open_run(ctx);
  const auto p = paired_evaluation(ctx.cfg, agent, true);
  write_json(ctx.dir / "agent_eval.json", p.to_json());
  write_json(ctx.dir / "baseline_rollout.json", p.baseline.to_json(true));
  write_json(ctx.dir / "agent_rollout.json", p.agent.to_json(true));
  std::ostringstream os;
  os << "baseline " << p.baseline.energy_kwh << " kWh, " << p.baseline.violation_ch_per_day << " degC*h/day; agent "
     << p.agent.energy_kwh << " kWh, " << p.agent.violation_ch_per_day << " degC*h/day; reduction "
     << 100.0 * p.energy_reduction() << "%";
  ctx.say(os.str());
  return kOk;
}

// ---- plot ----

/// Writes <stem>.svg and <stem>.csv next to each other in `out_dir`.
inline int cmd_plot(const std::string& report_path, const std::string& kind, const fs::path& out_dir,
                    std::ostream* out = nullptr) {
  if (!fs::exists(report_path)) throw InputError("report '" + report_path + "' does not exist");
  const auto p = plot_report(read_json(report_path), kind);
  fs::create_directories(out_dir);
  write_text(out_dir / (kind + ".svg"), p.svg);
  write_text(out_dir / (kind + ".csv"), p.csv);
  if (out != nullptr) *out << "wrote " << (out_dir / (kind + ".svg")).string() << '\n';
  return kOk;
}

}  // namespace pimodnn::cli
