// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance --work-dir DIR [--only N]
//
// Metric JSON for each criterion lands in DIR/criterion_N.json and the PASS/FAIL lines in
// DIR/summary.txt. Criterion 9 repeats the runs with the same seeds and compares the
// dumps byte for byte.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "pimodnn/cli/commands.hpp"
#include "pimodnn/numerics/grad_check.hpp"
#include "pimodnn/numerics/layers.hpp"

using namespace pimodnn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  json metrics = json::object();
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// Desk-scale SAC settings for the control criterion: batch 2048 at lr 1e-4 does not
// converge in 200 episodes on one core. r3 is raised from -1e-4: at that weight a 3 kW
// coil duty costs 3e-4 per step, two orders below the comfort bonus, and agents trained
// on it use more energy than the baseline (see README, "Control results").
const std::vector<std::string> kControlOverrides = {"control.sac.batch=256", "control.sac.lr=0.0003",
                                                    "control.sac.alpha_lr=0.0003", "control.sac.init_alpha=0.01",
                                                    "control.reward.r3_energy=-0.03"};

const std::vector<std::string> kConstrained = {"PI-ModNN", "PI-ModNN|L"};
const std::vector<int> kSizes = {7, 30};

std::string model_key(const std::string& v, int days) { return v + "@" + std::to_string(days); }

// ---- shared state: data and the four constrained models ----

struct Workspace {
  cli::RunConfig cfg = cli::default_config();
  std::vector<plant::TelemetryRecord> rec;
  std::map<std::string, std::unique_ptr<models::ThermalModel>> models;
  std::map<std::string, std::string> checkpoints;  // dumped checkpoint json
};

void train_models(Workspace& ws, const fs::path& dir) {
  ws.models.clear();
  ws.checkpoints.clear();
  for (const auto& v : kConstrained)
    for (int d : kSizes) {
      auto c = ws.cfg;
      c.train_days = d;
      auto m = training::build_variant(v, c.seed, c.model);
      (void)training::train(*m, cli::training_slice(c, ws.rec), c.train, c.seed, v);
      const json ck = models::checkpoint_json(*m, v);
      std::string file = "model_" + v + "_" + std::to_string(d) + ".json";
      std::replace(file.begin(), file.end(), '|', '_');
      cli::write_json(dir / file, ck);
      ws.checkpoints[model_key(v, d)] = ck.dump();
      ws.models[model_key(v, d)] = std::move(m);
      std::cerr << "  trained " << model_key(v, d) << '\n';
    }
}

// ---- 1: TRV is zero for constrained models ----

Outcome hard_constraints(Workspace& ws) {
  Outcome o;
  o.pass = true;
  for (const auto& v : kConstrained)
    for (int d : kSizes) {
      const auto t = cli::trv_for(ws.cfg, *ws.models.at(model_key(v, d)), ws.rec);
      o.metrics[model_key(v, d)] = t.to_json();
      if (t.total_plus != 0.0 || t.total_minus != 0.0) {
        o.pass = false;
        o.detail += model_key(v, d) + " TRV+ " + fmt(t.total_plus) + " TRV- " + fmt(t.total_minus) + "; ";
      }
    }
  if (o.pass) o.detail = "TRV+ = TRV- = 0 for PI-ModNN and PI-ModNN|L at 7 and 30 days, levels {-4,-2,0,2,4} kW";
  return o;
}

// ---- 2: gradients against central differences ----

Outcome gradient_fidelity(const Workspace& ws) {
  using namespace numerics;
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> width(1, 6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random_tensor = [&](Eigen::Index r, Eigen::Index c) {
    Tensor2 t(r, c);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
    return t;
  };
  double worst = 0.0;
  int instances = 0;
  json per_kind = json::object();
  auto record = [&](const std::string& kind, double w) {
    worst = std::max(worst, w);
    ++instances;
    per_kind[kind] = std::max(per_kind.value(kind, 0.0), w);
  };

  // layer kinds: dense MLP with each activation, GRU, LSTM, cycled over random shapes
  for (int i = 0; i < 50; ++i) {
    const int in = width(rng), hid = width(rng), out = width(rng), rows = width(rng);
    const Tensor2 x = random_tensor(rows, in);
    ParamSet ps;
    switch (i % 5) {
      case 0:
      case 1:
      case 2: {
        const ActivationKind act = i % 5 == 0 ? ActivationKind::Tanh : i % 5 == 1 ? ActivationKind::Sigmoid : ActivationKind::Relu;
        const MlpSpec spec{"m", {in, hid, out}, act};
        add_mlp(ps, spec, rng);
        record("mlp" + std::to_string(i % 5),
               grad_check([&](Tape& t) { return mean(square(mlp(t, ps, spec, t.constant(x)))); }, ps).worst());
        break;
      }
      case 3:
        add_gru(ps, "g", in, hid, rng);
        record("gru", grad_check(
                          [&](Tape& t) {
                            Var h = t.constant(Tensor2::Zero(rows, hid));
                            for (int k = 0; k < 3; ++k) h = gru_cell(t, ps, "g", t.constant(x), h);
                            return sum(square(h));
                          },
                          ps)
                          .worst());
        break;
      default:
        add_lstm(ps, "l", in, hid, rng);
        record("lstm", grad_check(
                           [&](Tape& t) {
                             LstmState s{t.constant(Tensor2::Zero(rows, hid)), t.constant(Tensor2::Zero(rows, hid))};
                             for (int k = 0; k < 3; ++k) s = lstm_cell(t, ps, "l", t.constant(x), s);
                             return sum(square(s.h));
                           },
                           ps)
                           .worst());
    }
  }

  // the full one-step model, two steps from measured state
  models::ModelConfig mc;
  mc.encoder_len = 8;
  mc.decoder_len = 8;
  const auto stats = models::compute_stats(cli::training_slice(ws.cfg, ws.rec));
  std::uniform_int_distribution<std::size_t> start(0, ws.rec.size() - 40);
  for (int i = 0; i < 10; ++i) {
    const std::string v = i % 2 == 0 ? "PI-ModNN" : "PI-ModNN|LC";
    auto m = training::build_variant(v, static_cast<std::uint64_t>(100 + i), mc);
    m->set_stats(stats);
    const std::vector<models::Episode> eps{models::episode_at(ws.rec, start(rng), 8, 8),
                                           models::episode_at(ws.rec, start(rng), 8, 8)};
    const auto b = models::make_batch(*m, eps);
    record(v, grad_check(
                  [&](Tape& t) {
                    auto s = m->session(t, true);
                    auto carry = s->initial_carry(b.rows);
                    Var x = t.constant(b.x_meas[0]);
                    for (std::size_t k = 0; k < 2; ++k) x = s->step(x, t.constant(b.u[k]), t.constant(b.w[k]), carry);
                    return sum(square(x));
                  },
                  m->param_sets())
                  .worst());
  }
  o.pass = instances >= 50 && worst < 1e-4;
  o.metrics = {{"instances", instances}, {"worst_relative", worst}, {"per_kind", per_kind}};
  o.detail = std::to_string(instances) + " instances, worst relative discrepancy " + fmt(worst, 3) + " (< 1e-4)";
  return o;
}

// ---- 3: rolling MAE on the test month ----

Outcome accuracy(Workspace& ws) {
  Outcome o;
  const auto r = cli::rolling_for(ws.cfg, *ws.models.at("PI-ModNN@30"), ws.rec);
  o.metrics = r.to_json();
  o.metrics["sensor_noise_c"] = ws.cfg.data.plant.noise_sigma;
  o.pass = r.count == 2976 && r.aggregate_mae <= 0.5;
  o.detail = "PI-ModNN 30 days: rolling MAE " + fmt(r.aggregate_mae) + " degC over " + std::to_string(r.count) +
             " origins (<= 0.5, count 2976)";
  return o;
}

// ---- 4: monotone response over a 101-point u sweep ----

Outcome monotone_response(Workspace& ws) {
  Outcome o;
  std::mt19937_64 rng(404);
  const std::size_t lo = ws.cfg.test_start();
  const std::size_t hi = lo + static_cast<std::size_t>(ws.cfg.eval.test_days) * 96 - 96;
  std::uniform_int_distribution<std::size_t> start(lo - 96, hi);
  std::uniform_real_distribution<double> dx(-3.0, 3.0), dh(-0.5, 0.5), to(5.0, 40.0), sol(0.0, 1000.0),
      occ(0.0, 10.0), ph(0.0, 2.0 * M_PI);
  long inversions = 0;
  for (const auto& v : kConstrained)
    for (int d : kSizes) {
      auto& m = *ws.models.at(model_key(v, d));
      long here = 0;
      double min_step = 1e300;
      for (int draw = 0; draw < 100; ++draw) {
        const auto s0 = start(rng);
        auto st = models::encode(m, std::span(ws.rec).subspan(s0, static_cast<std::size_t>(m.config().encoder_len)));
        st.t_zone_c += dx(rng);
        for (auto& c : st.carry)
          for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = std::clamp(c.data()[i] + dh(rng), -1.0, 1.0);
        const double p = ph(rng);
        const models::Disturbance w{to(rng), sol(rng), occ(rng), std::sin(p), std::cos(p)};
        double prev = -1e300;
        for (int i = 0; i <= 100; ++i) {
          auto s = st;
          const double y = models::decode_step(m, s, -4.0 + 0.08 * i, w);
          if (i > 0) min_step = std::min(min_step, y - prev);
          if (y < prev) ++here;
          prev = y;
        }
      }
      o.metrics[model_key(v, d)] = {{"draws", 100}, {"inversions", here}, {"min_step_c", min_step}};
      inversions += here;
    }
  o.pass = inversions == 0;
  o.detail = std::to_string(inversions) + " inversions over 4 models x 100 draws x 101 points";
  return o;
}

// ---- 5: rule importance ----

struct RiCase {
  double fs, fsi, eps, expect;
};

Outcome rule_importance_mechanics(const Workspace& ws, const fs::path& dir, evaluation::AblationResult* keep) {
  Outcome o;
  // expected values from natural logs, ln(a/b) / ln 10; equal metrics give 0 and a zero
  // metric is held off -inf by the epsilon
  auto lg = [](double a, double b) { return std::log(a / b) / std::log(10.0); };
  const std::vector<RiCase> cases{{1.0, 0.1, 1e-6, lg(1.000001, 0.100001)},
                                  {0.5, 0.5, 1e-6, 0.0},
                                  {0.0, 0.0, 1e-6, 0.0},
                                  {0.0, 1.0, 1e-6, lg(1e-6, 1.000001)},
                                  {2.0, 0.0, 1e-6, lg(2.000001, 1e-6)},
                                  {0.3, 0.03, 1e-2, lg(0.31, 0.04)}};
  double worst = 0.0;
  for (const auto& c : cases)
    worst = std::max(worst, std::abs(evaluation::rule_importance(c.fs, c.fsi, c.eps) - c.expect));
  const bool hand_ok = worst <= 1e-9;

  auto acfg = cli::ablation_config(ws.cfg);
  acfg.days = kSizes;
  acfg.seeds = 5;
  const auto res = evaluation::run_ablation(ws.rec, ws.cfg.test_start(), acfg, &std::cerr);
  cli::write_json(dir / "ablation.json", res.to_json(true));
  const auto* ri = res.ri("constraints", "trv", 0);
  const bool have_ri = ri != nullptr && ri->ri.n > 0;
  int unconstrained = 0, positive = 0, failed = 0;
  for (const auto& c : res.cells) {
    if (!c.ok) ++failed;
    if (c.ok && !training::variant_flags(c.variant).hard_constraints) {
      ++unconstrained;
      if (c.trv_total() > 0.0) ++positive;
    }
  }
  o.pass = hand_ok && have_ri && ri->ri.median >= 0.0 && failed == 0;
  o.metrics = {{"hand_cases_worst_abs", worst},
               {"ablation", res.to_json(false)},
               {"unconstrained_runs", unconstrained},
               {"unconstrained_runs_with_trv", positive}};
  o.detail = "hand cases within " + fmt(worst, 2) + "; median RI(constraints, TRV) " +
             (have_ri ? fmt(ri->ri.median) : std::string("n/a")) + " over " + (have_ri ? std::to_string(ri->ri.n) : "0") +
             " pairs; " + std::to_string(positive) + " of " + std::to_string(unconstrained) +
             " unconstrained runs with TRV > 0; " + std::to_string(failed) + " failed cells";
  if (keep != nullptr) *keep = res;
  return o;
}

// ---- 6: reward terms ----

Outcome reward_correctness() {
  using namespace control;
  Outcome o;
  const ActionBounds b;
  const ComfortBounds c;
  const RewardWeights w;
  const auto ten = plant::make_timestamp(2024, 7, 1, 10, 0), two = plant::make_timestamp(2024, 7, 1, 2, 0);
  std::vector<std::pair<std::string, double>> err;

  const Action idle{-1.0, 0.0, 0.0};
  const auto m = map_action(idle, b, two);
  const auto t = reward_terms(m, idle, idle, 22.0, 22.0, 30.0, c.at(two), b, w);
  err.emplace_back("comfort_satisfied_reward", std::abs(t.reward - 0.04));

  RewardTerms hot;
  hot.comfort_f = comfort_violation(25.0, c, ten);
  err.emplace_back("comfort_1p8F", std::abs(hot.comfort_f - 1.8));

  // (0.25*30 + 0.75*24 - 14) * 0.2 m3/s * 1.2 kg/m3 * 1.005 kJ/kgK
  err.emplace_back("coil_3p136kW", std::abs(coil_energy(0.2, 0.1, 30.0, 24.0, 14.0) - 13.0 * 0.2 * 1.2 * 1.005));

  std::mt19937_64 rng(66);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> v(0.0, 3.0);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    RewardTerms r;
    r.comfort_f = coin(rng) ? 0.0 : v(rng);
    r.action.q_sup_cfm = coin(rng) ? 0.0 : v(rng);
    r.action.t_sup_f = coin(rng) ? 0.0 : v(rng);
    combine(r, w);
    if ((r.comfortable == 1.0) != (r.comfort_f == 0.0 && r.action.total() == 0.0)) ++mismatches;
  }
  err.emplace_back("comfort_bonus_biconditional", static_cast<double>(mismatches));

  err.emplace_back("smoothness_0p7", std::abs(smoothness_penalty({0.5, -0.2, 0.0}, {0.0, 0.0, 0.0}) - 0.7));

  double worst = 0.0;
  for (const auto& [k, e] : err) {
    o.metrics[k] = e;
    worst = std::max(worst, e);
  }
  o.pass = worst <= 1e-9;
  o.detail = std::to_string(err.size()) + " reward cases, worst error " + fmt(worst, 2);
  return o;
}

// ---- 7: SAC against the rule-based baseline on the plant ----

json control_seed(const cli::RunConfig& cfg, models::ThermalModel& env_model,
                  const std::vector<plant::TelemetryRecord>& rec, int seed_index) {
  auto c = cfg;
  c.seed = cfg.seed + static_cast<std::uint64_t>(seed_index);
  const auto slice = cli::training_slice(c, rec);
  const auto ecfg = c.env_config();
  control::ModelEnv env(env_model, std::vector<plant::TelemetryRecord>(slice.begin(), slice.end()), ecfg);
  control::SacAgent agent(control::kObsDim, control::kActionDim, c.control.sac, c.seed);
  control::AgentTrainOptions opt;
  opt.seed = c.seed;
  const auto rep = control::train_agent(agent, env, opt);
  const auto p = cli::paired_evaluation(c, agent, false);
  json j = p.to_json();
  j["seed"] = c.seed;
  j["episodes"] = rep.episodes.size();
  j["final_return"] = rep.episodes.empty() ? 0.0 : rep.episodes.back().episode_return;
  return j;
}

cli::RunConfig control_config(const cli::RunConfig& base) { return cli::apply_overrides(base, kControlOverrides); }

Outcome control_analogue(Workspace& ws, const fs::path& dir) {
  Outcome o;
  const auto cfg = control_config(ws.cfg);
  int good = 0;
  json seeds = json::array();
  std::string per;
  for (int s = 0; s < 5; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    const json j = control_seed(cfg, *ws.models.at("PI-ModNN@30"), ws.rec, s);
    const double red = j.at("energy_reduction").get<double>();
    const double viol = j.at("agent").at("violation_ch_per_day").get<double>();
    const bool ok = red >= 0.10 && viol <= 0.5 && j.at("episodes").get<int>() <= 200;
    good += ok ? 1 : 0;
    seeds.push_back(j);
    per += (per.empty() ? "" : ", ") + fmt(100.0 * red, 3) + "%/" + fmt(viol, 2);
    std::cerr << "  control seed " << s << ": reduction " << red << ", violation " << viol << " degC*h/day ("
              << seconds_since(t0) << " s)\n";
  }
  cli::write_json(dir / "control_runs.json", seeds);
  o.pass = good >= 3;
  o.metrics = {{"overrides", kControlOverrides}, {"seeds", seeds}, {"qualifying", good}};
  o.detail = std::to_string(good) + " of 5 seeds reach >= 10% coil-energy reduction at <= 0.5 degC*h/day (" + per +
             "; " + std::to_string(cfg.control.sac.episodes) + " episodes, " + std::to_string(cfg.control.eval_days) +
             " plant days)";
  return o;
}

// ---- 8: gate ----

void make_adversarial(models::PiModNn& m) {
  // negative control gain everywhere: f_NNB pushes the prediction down as u rises
  m.fnna().value("fnna.l0.W").setOnes();
  m.fnna().value("fnna.l0.b").setConstant(100.0);
  m.fnna().value("fnna.l1.W").setConstant(1e-3);
  m.fnnb().value("fnnb.l0.W").setConstant(-1.0);
  m.fnnb().value("fnnb.l0.b").setConstant(100.0);
  m.fnnb().value("fnnb.l1.W").setOnes();
}

Outcome end_to_end_gate(Workspace& ws) {
  Outcome o;
  const auto good = cli::run_gate(ws.cfg, *ws.models.at("PI-ModNN@30"), ws.rec);
  auto owner = training::build_variant("PI-ModNN|LC", ws.cfg.seed, ws.cfg.model);
  auto& bad = dynamic_cast<models::PiModNn&>(*owner);
  bad.set_stats(models::compute_stats(cli::training_slice(ws.cfg, ws.rec)));
  make_adversarial(bad);
  const auto verdict = cli::run_gate(ws.cfg, bad, ws.rec);
  const double bad_trv = verdict.steps.at(1).details.at("trv").at("total_plus_c_step").get<double>() +
                         verdict.steps.at(1).details.at("trv").at("total_minus_c_step").get<double>();
  bool recommends = false;
  for (const auto& r : verdict.steps.at(2).details.value("recommendations", json::array()))
    if (r.at("prior") == "constraints") recommends = true;
  const bool good_ok = good.passed() && good.steps.size() == 4 &&
                       std::all_of(good.steps.begin(), good.steps.end(), [](const auto& s) { return s.status != "FAIL"; });
  const bool bad_ok = !verdict.passed() && verdict.steps.at(1).status == "FAIL" && bad_trv > 0.0 && recommends;
  o.pass = good_ok && bad_ok;
  o.metrics = {{"constrained", good.to_json()}, {"adversarial", verdict.to_json()}};
  std::string statuses;
  for (const auto& s : good.steps) statuses += s.status.substr(0, 4) + " ";
  o.detail = "trained PI-ModNN: " + statuses + "; adversarial |LC: step 2 " + verdict.steps.at(1).status + " (TRV " +
             fmt(bad_trv) + "), step 3 \"" + verdict.steps.at(2).reason + "\"";
  return o;
}

// ---- 9: rerun and compare ----

Outcome reproducibility(Workspace& ws, const fs::path& dir, const std::map<int, json>& first,
                        const evaluation::AblationResult& ablation, const std::set<int>& ran) {
  Outcome o;
  const fs::path re = dir / "rerun";
  fs::create_directories(re);
  std::vector<std::string> same, differ;
  auto compare = [&](const std::string& what, const json& a, const json& b) {
    (a.dump() == b.dump() ? same : differ).push_back(what);
  };

  const auto first_checkpoints = ws.checkpoints;
  const bool need_models = ran.count(1) || ran.count(3) || ran.count(4) || ran.count(8) || ran.count(7);
  if (need_models) {
    train_models(ws, re);
    for (const auto& [k, v] : first_checkpoints) compare("checkpoint " + k, json(v), json(ws.checkpoints.at(k)));
  }
  if (ran.count(1)) compare("criterion 1", first.at(1), hard_constraints(ws).metrics);
  if (ran.count(2)) compare("criterion 2", first.at(2), gradient_fidelity(ws).metrics);
  if (ran.count(3)) compare("criterion 3", first.at(3), accuracy(ws).metrics);
  if (ran.count(4)) compare("criterion 4", first.at(4), monotone_response(ws).metrics);
  if (ran.count(5)) {
    // two cells of the grid rather than the whole grid
    auto acfg = cli::ablation_config(ws.cfg);
    acfg.days = kSizes;
    acfg.seeds = 5;
    const auto full = ablation.to_json(false).at("cells");
    for (const auto& [variant, days, s] : std::vector<std::tuple<std::string, int, int>>{{"PI-ModNN|C", 7, 0}, {"PI-ModNN", 30, 4}}) {
      evaluation::AblationResult one;
      one.cells.push_back(evaluation::run_cell(ws.rec, ws.cfg.test_start(), acfg, variant, days, s));
      const json cell = one.to_json(false).at("cells").at(0);
      json orig;
      for (const auto& c : full)
        if (c.at("variant") == variant && c.at("days") == days && c.at("seed_index") == s) orig = c;
      compare("criterion 5 cell " + variant + "@" + std::to_string(days) + "#" + std::to_string(s), orig, cell);
    }
  }
  if (ran.count(6)) compare("criterion 6", first.at(6), reward_correctness().metrics);
  if (ran.count(7)) {
    const json again = control_seed(control_config(ws.cfg), *ws.models.at("PI-ModNN@30"), ws.rec, 0);
    compare("criterion 7 seed 0", first.at(7).at("seeds").at(0), again);
  }
  if (ran.count(8)) compare("criterion 8", first.at(8), end_to_end_gate(ws).metrics);

  o.pass = differ.empty() && !same.empty();
  o.metrics = {{"identical", same}, {"different", differ}};
  o.detail = std::to_string(same.size()) + " reruns byte-identical";
  if (!differ.empty()) {
    o.detail += "; differ: ";
    for (const auto& d : differ) o.detail += d + " ";
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path dir = "acceptance_runs";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work-dir" && i + 1 < argc) {
      dir = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      only.insert(std::stoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--work-dir DIR] [--only N]...\n";
      return 2;
    }
  }
  auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };
  fs::create_directories(dir);

  static const char* names[] = {"",
                                "hard-constraint consistency",
                                "gradient fidelity",
                                "desk-scale accuracy",
                                "monotone response",
                                "rule-importance mechanics",
                                "reward correctness",
                                "control analogue",
                                "end-to-end gate",
                                "reproducibility"};

  std::ofstream summary(dir / "summary.txt");
  Workspace ws;
  ws.rec = cli::load_records(ws.cfg);
  std::map<int, json> metrics;
  std::set<int> ran;
  evaluation::AblationResult ablation;
  int failed = 0;

  auto run = [&](int n, const std::function<Outcome()>& f) {
    if (!wanted(n)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double s = seconds_since(t0);
    if (n != 9) {
      metrics[n] = o.metrics;
      ran.insert(n);
    }
    cli::write_json(dir / ("criterion_" + std::to_string(n) + ".json"),
                    {{"criterion", n}, {"name", names[n]}, {"pass", o.pass}, {"metrics", o.metrics}});
    if (!o.pass) ++failed;
    char line[4096];
    std::snprintf(line, sizeof line, "[%s] %d %s: %s (%.0f s)\n", o.pass ? "PASS" : "FAIL", n, names[n],
                  o.detail.c_str(), s);
    std::fputs(line, stdout);
    std::fflush(stdout);
    summary << line << std::flush;
  };

  const bool need_models = wanted(1) || wanted(3) || wanted(4) || wanted(7) || wanted(8);
  if (need_models) {
    const auto t0 = std::chrono::steady_clock::now();
    train_models(ws, dir);
    std::cerr << "  models trained in " << seconds_since(t0) << " s\n";
  }
  run(1, [&] { return hard_constraints(ws); });
  run(2, [&] { return gradient_fidelity(ws); });
  run(3, [&] { return accuracy(ws); });
  run(4, [&] { return monotone_response(ws); });
  run(5, [&] { return rule_importance_mechanics(ws, dir, &ablation); });
  run(6, [&] { return reward_correctness(); });
  run(7, [&] { return control_analogue(ws, dir); });
  run(8, [&] { return end_to_end_gate(ws); });
  run(9, [&] { return reproducibility(ws, dir, metrics, ablation, ran); });

  std::printf("%d of %zu criteria failed\n", failed, only.empty() ? std::size_t{9} : only.size());
  return failed == 0 ? 0 : 1;
}
