#include <gtest/gtest.h>

#include <random>

#include "pimodnn/control/agent_training.hpp"
#include "pimodnn/control/baseline.hpp"
#include "pimodnn/control/bounds.hpp"
#include "pimodnn/control/env.hpp"
#include "pimodnn/control/evaluate.hpp"
#include "pimodnn/control/replay.hpp"
#include "pimodnn/control/reward.hpp"
#include "pimodnn/control/sac.hpp"
#include "pimodnn/plant/dataset.hpp"
#include "pimodnn/training/variants.hpp"

using namespace pimodnn;
using namespace pimodnn::control;

namespace {

const plant::Timestamp kTen = plant::make_timestamp(2024, 7, 1, 10, 0);   // occupied
const plant::Timestamp kTwo = plant::make_timestamp(2024, 7, 1, 2, 0);    // unoccupied

constexpr double kCfm = 2118.88;
constexpr double kRhoCp = 1.2 * 1.005;

}  // namespace

TEST(MapAction, OccupiedExtremes) {
  const ActionBounds b;
  const auto hi = map_action({1.0, 0.0, 1.0}, b, kTen);
  EXPECT_DOUBLE_EQ(hi.q_sup, 0.28);
  EXPECT_DOUBLE_EQ(hi.t_sup, 32.2);
  const auto lo = map_action({-1.0, -1.0, -1.0}, b, kTen);
  EXPECT_DOUBLE_EQ(lo.q_sup, 0.09);
  EXPECT_EQ(lo.q_out, 0.0);
  EXPECT_DOUBLE_EQ(lo.t_sup, 12.8);
}

TEST(MapAction, ZeroIsMidpoint) {
  const ActionBounds b;
  const auto m = map_action({0.0, 0.0, 0.0}, b, kTen);
  EXPECT_DOUBLE_EQ(m.q_sup, (0.09 + 0.28) / 2);
  EXPECT_DOUBLE_EQ(m.q_out, m.q_sup / 2);
  EXPECT_DOUBLE_EQ(m.t_sup, (12.8 + 32.2) / 2);
  EXPECT_DOUBLE_EQ(map_action({0.0, 0.0, 0.0}, b, kTwo).q_sup, 0.14);
}

TEST(MapAction, AlwaysWithinBoundsProperty) {
  const ActionBounds b;
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> a(-1.5, 1.5);
  std::uniform_int_distribution<int> minute(0, 24 * 60 - 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto t = plant::make_timestamp(2024, 7, 1) + 60 * minute(rng);
    const auto m = map_action({a(rng), a(rng), a(rng)}, b, t);
    const Range q = b.q_sup(t);
    EXPECT_GE(m.q_sup, q.lo);
    EXPECT_LE(m.q_sup, q.hi);
    EXPECT_GE(m.q_out, 0.0);
    EXPECT_LE(m.q_out, m.q_sup);
    EXPECT_GE(m.t_sup, 12.8);
    EXPECT_LE(m.t_sup, 32.2);
  }
}

TEST(Reward, ComfortViolationExamples) {
  const ComfortBounds c;
  EXPECT_EQ(comfort_violation(23.0, c, kTen), 0.0);
  EXPECT_NEAR(comfort_violation(25.0, c, kTen), 77.0 - 75.2, 1e-9);
  EXPECT_NEAR(comfort_violation(20.0, c, kTen), (21.7 - 20.0) * 1.8, 1e-9);
  EXPECT_EQ(comfort_violation(18.3, c, kTwo), 0.0);
}

TEST(Reward, ActionViolationExamples) {
  const ActionBounds b;
  const auto inside = map_action({0.3, -0.2, 0.9}, b, kTen);
  EXPECT_EQ(action_violation(inside, b).total(), 0.0);
  auto m = map_action({1.0, 0.0, 1.0}, b, kTen);
  m.req_q_sup = 0.30;
  EXPECT_NEAR(action_violation(m, b).q_sup_cfm, 0.02 * kCfm, 1e-9);
  m.req_q_sup = 0.28;
  m.req_t_sup = 34.0;
  EXPECT_NEAR(action_violation(m, b).t_sup_f, 3.24, 1e-9);
  EXPECT_NEAR(action_violation(m, b).total(), 3.24, 1e-9);
  // requests past +-1 show up before the clamp
  const auto over = map_action({1.2, 0.0, 0.0}, b, kTen);
  EXPECT_NEAR(action_violation(over, b).q_sup_cfm, 0.1 * (0.28 - 0.09) * kCfm, 1e-9);
}

TEST(Reward, CoilEnergyExamples) {
  EXPECT_NEAR(coil_energy(0.2, 0.1, 30.0, 24.0, 14.0), kRhoCp * 0.2 * 13.0, 1e-12);
  EXPECT_NEAR(coil_energy(0.2, 0.1, 30.0, 24.0, 14.0), 3.136, 1e-3);
  EXPECT_EQ(coil_energy(0.2, 0.05, 30.0, 24.0, 0.25 * 30.0 + 0.75 * 24.0), 0.0);
  EXPECT_EQ(coil_energy(0.0, 0.0, 30.0, 24.0, 14.0), 0.0);
  // heating duty counts with the same sign
  EXPECT_NEAR(coil_energy(0.2, 0.0, 10.0, 20.0, 30.0), kRhoCp * 0.2 * 10.0, 1e-12);
  EXPECT_THROW(coil_energy(0.1, 0.2, 30.0, 24.0, 14.0), ContractError);
}

TEST(Reward, CompositionExamples) {
  const ActionBounds b;
  const ComfortBounds c;
  const RewardWeights w;
  // unoccupied, zero airflow, in band, repeated action
  const Action a{-1.0, 0.0, 0.0};
  const auto m = map_action(a, b, kTwo);
  ASSERT_EQ(m.q_sup, 0.0);
  const auto t = reward_terms(m, a, a, 22.0, 22.0, 30.0, c.at(kTwo), b, w);
  EXPECT_EQ(t.comfortable, 1.0);
  EXPECT_EQ(t.reward, 0.04);

  RewardTerms only_comfort;
  only_comfort.comfort_f = 1.8;
  EXPECT_NEAR(combine(only_comfort, w), -0.18, 1e-12);
  EXPECT_EQ(only_comfort.comfortable, 0.0);

  EXPECT_NEAR(smoothness_penalty({0.5, -0.2, 0.0}, {0.0, 0.0, 0.0}), 0.7, 1e-12);
  RewardTerms smooth;
  smooth.smoothness = 0.7;
  EXPECT_NEAR(combine(smooth, w), 0.04 - 1e-3 * 0.7, 1e-12);
}

TEST(Reward, ComfortBonusBiconditionalProperty) {
  std::mt19937_64 rng(52);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> v(0.0, 3.0);
  const RewardWeights w;
  for (int trial = 0; trial < 500; ++trial) {
    RewardTerms t;
    t.comfort_f = coin(rng) ? 0.0 : v(rng);
    t.action.q_sup_cfm = coin(rng) ? 0.0 : v(rng);
    t.action.t_sup_f = coin(rng) ? 0.0 : v(rng);
    t.energy_kw = v(rng);
    combine(t, w);
    EXPECT_TRUE(t.comfortable == 0.0 || t.comfortable == 1.0);
    EXPECT_EQ(t.comfortable == 1.0, t.comfort_f == 0.0 && t.action.total() == 0.0);
  }
}

TEST(Baseline, Rules) {
  const ActionBounds ab;
  const ComfortBounds cb;
  const auto mid = baseline_controller(22.85, 28.0, kTen, ab, cb);
  EXPECT_DOUBLE_EQ(mid.q_sup, 0.09);
  EXPECT_DOUBLE_EQ(mid.q_out, 0.3 * 0.09);
  const auto hot = baseline_controller(25.0, 28.0, kTen, ab, cb);
  EXPECT_DOUBLE_EQ(hot.q_sup, 0.28);
  EXPECT_DOUBLE_EQ(hot.t_sup, 12.8);
  const auto night = baseline_controller(22.0, 20.0, kTwo, ab, cb);
  EXPECT_EQ(night.q_sup, 0.0);
  EXPECT_EQ(night.q_out, 0.0);
  const auto again = baseline_controller(25.0, 28.0, kTen, ab, cb);
  EXPECT_EQ(again.t_sup, hot.t_sup);
}

TEST(Replay, FifoEvictionProperty) {
  std::mt19937_64 rng(53);
  for (std::size_t cap : {1u, 3u, 17u}) {
    ReplayBuffer buf(cap);
    for (int i = 0; i < 50; ++i) {
      buf.push({{0.0}, {}, static_cast<double>(i), {0.0}, false});
      ASSERT_LE(buf.size(), cap);
      // live entries are the most recent min(i+1, cap) pushes, oldest first
      const std::size_t n = buf.size();
      for (std::size_t k = 0; k < n; ++k) EXPECT_EQ(buf.at(k).reward, static_cast<double>(i + 1 - n + k));
    }
    const auto idx = buf.sample_indices(buf.size(), rng);
    std::vector<bool> seen(buf.size(), false);
    for (auto j : idx) {
      ASSERT_LT(j, buf.size());
      EXPECT_FALSE(seen[j]);
      seen[j] = true;
    }
    EXPECT_THROW((void)buf.sample_indices(buf.size() + 1, rng), ContractError);
  }
  EXPECT_THROW(ReplayBuffer(0), InputError);
}

namespace {

SacConfig small_sac() {
  SacConfig c;
  c.hidden = 16;
  c.batch = 8;
  c.buffer_capacity = 64;
  c.episodes = 1;
  return c;
}

std::vector<Transition> random_transitions(int n, bool done, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Transition> out;
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.obs.resize(kObsDim);
    t.next_obs.resize(kObsDim);
    for (auto& v : t.obs) v = u(rng);
    for (auto& v : t.next_obs) v = u(rng);
    for (auto& v : t.action) v = u(rng);
    t.reward = u(rng);
    t.done = done;
    out.push_back(t);
  }
  return out;
}

// plain Eigen forward pass of a ReLU critic on [obs, action]
double critic_value(const numerics::ParamSet& ps, const std::string& name, const Transition& tr) {
  Eigen::RowVectorXd x(kObsDim + kActionDim);
  for (int i = 0; i < kObsDim; ++i) x(i) = tr.obs[static_cast<std::size_t>(i)];
  for (int i = 0; i < kActionDim; ++i) x(kObsDim + i) = tr.action[static_cast<std::size_t>(i)];
  for (int l = 0; l < 3; ++l) {
    const std::string p = name + ".l" + std::to_string(l);
    x = x * ps.value(p + ".W") + ps.value(p + ".b");
    if (l < 2) x = x.cwiseMax(0.0);
  }
  return x(0);
}

}  // namespace

TEST(Sac, TerminalTargetIsReward) {
  SacAgent ag(kObsDim, kActionDim, small_sac(), 3);
  // targets that would dominate y if they were consulted
  ag.q1_target().value("q1.l2.b").setConstant(1e3);
  ag.q2_target().value("q2.l2.b").setConstant(1e3);
  const auto trs = random_transitions(8, true, 4);
  std::vector<const Transition*> batch;
  double expect = 0.0;
  for (const auto& t : trs) {
    batch.push_back(&t);
    const double e1 = critic_value(ag.q1(), "q1", t) - t.reward;
    const double e2 = critic_value(ag.q2(), "q2", t) - t.reward;
    expect += (e1 * e1 + e2 * e2) / 8.0;
  }
  EXPECT_NEAR(ag.update_on(batch).critic_loss, expect, 1e-10);
}

TEST(Sac, TauOneCopiesCritics) {
  auto cfg = small_sac();
  cfg.tau = 1.0;
  SacAgent ag(kObsDim, kActionDim, cfg, 5);
  const auto trs = random_transitions(8, false, 6);
  std::vector<const Transition*> batch;
  for (const auto& t : trs) batch.push_back(&t);
  ag.update_on(batch);
  for (const auto& n : ag.q1().names()) EXPECT_EQ(ag.q1_target().value(n), ag.q1().value(n)) << n;
  for (const auto& n : ag.q2().names()) EXPECT_EQ(ag.q2_target().value(n), ag.q2().value(n)) << n;
  cfg.tau = 0.0;
  EXPECT_THROW(cfg.validate(), InputError);
}

TEST(Sac, ZeroLearningRateLeavesTargetsUnchanged) {
  auto cfg = small_sac();
  cfg.lr = 0.0;
  SacAgent ag(kObsDim, kActionDim, cfg, 7);
  std::vector<numerics::Tensor2> before;
  for (const auto& n : ag.q1_target().names()) before.push_back(ag.q1_target().value(n));
  const auto trs = random_transitions(8, false, 8);
  std::vector<const Transition*> batch;
  for (const auto& t : trs) batch.push_back(&t);
  for (int i = 0; i < 5; ++i) ag.update_on(batch);
  std::size_t k = 0;
  for (const auto& n : ag.q1_target().names()) EXPECT_EQ(ag.q1_target().value(n), before[k++]) << n;
}

TEST(Sac, CheckpointRoundTrip) {
  SacAgent ag(kObsDim, kActionDim, small_sac(), 9);
  auto back = SacAgent::from_json(ag.to_json());
  const std::vector<double> obs(kObsDim, 0.3);
  EXPECT_EQ(ag.act_deterministic(obs), back.act_deterministic(obs));
  EXPECT_THROW(SacAgent::from_json({{"format", "x"}}), InputError);
}

TEST(Env, EpisodeEndsAt192) {
  PlantEnv env({});
  env.reset(1);
  int n = 0;
  StepResult r;
  while (!env.done()) {
    r = env.step(env.baseline_action());
    ++n;
    EXPECT_EQ(r.done, n == 192);
  }
  EXPECT_EQ(n, 192);
  EXPECT_THROW(env.step({0.0, 0.0, 0.0}), ContractError);
}

TEST(Env, SameSeedSameTrajectory) {
  auto run = [](std::uint64_t seed) {
    PlantEnv env({});
    env.reset(seed);
    std::vector<double> tz;
    while (!env.done()) tz.push_back(env.step(env.baseline_action()).t_zone);
    return tz;
  };
  EXPECT_EQ(run(4), run(4));
  EXPECT_NE(run(4), run(5));
}

TEST(Env, SupplyAtZoneTemperatureIsDisturbanceOnly) {
  plant::DatasetSpec spec;
  spec.days = 5;
  const auto rec = plant::generate_dataset(spec).records;
  models::ModelConfig mc;
  mc.encoder_len = 8;
  mc.decoder_len = 8;
  auto m = training::build_variant("PI-ModNN", 2, mc);
  m->set_stats(models::compute_stats(rec));
  ModelEnv env(*m, rec);
  for (double q : {-1.0, 0.5}) {
    env.reset(11);
    const auto start = env.start_record();
    auto state = models::encode(*m, std::span<const plant::TelemetryRecord>(rec).subspan(start + 1 - 8, 8));
    const double expect = models::decode_step(*m, state, 0.0, disturbance_of(exogenous_of(rec[start])));
    const auto& ab = env.config().action_bounds;
    auto a = normalize_action({0.0, 0.0, env.t_zone()}, ab, env.current().time);
    a[0] = q;
    const auto r = env.step(a);
    EXPECT_NEAR(r.u_kw, 0.0, 1e-12);
    EXPECT_NEAR(r.t_zone, expect, 1e-9);
  }
}

TEST(Evaluate, ZeroDutyUsesNoEnergy) {
  PlantEnvConfig pc;
  const auto rep = evaluate_policy(zero_duty_policy(), pc, {}, 1, 3);
  EXPECT_NEAR(rep.energy_kwh, 0.0, 1e-9);
  EXPECT_GE(rep.violation_ch_per_day, 0.0);
}

TEST(Evaluate, BaselineHoldsBand) {
  const auto rep = evaluate_policy(baseline_policy(), PlantEnvConfig{}, {}, 3, 3, true);
  EXPECT_LT(rep.violation_ch_per_day, 0.05);
  EXPECT_GT(rep.energy_kwh, 0.0);
  EXPECT_EQ(rep.trace.size(), 3u * 96u);
}

TEST(AgentTraining, BeatsRandomPolicyOnPlant) {
  SacConfig cfg;
  cfg.hidden = 32;
  cfg.batch = 64;
  cfg.lr = 1e-3;
  cfg.alpha_lr = 1e-3;
  cfg.init_alpha = 0.05;
  cfg.episodes = 12;
  cfg.warmup_steps = 400;
  cfg.buffer_capacity = 20000;
  SacAgent ag(kObsDim, kActionDim, cfg, 1);
  PlantEnv env({});
  train_agent(ag, env, {.seed = 1});
  auto mean_return = [](const Policy& p) {
    double s = 0.0;
    for (std::uint64_t seed = 100; seed < 103; ++seed) s += evaluate_policy(p, PlantEnvConfig{}, {}, 2, seed).mean_reward;
    return s / 3.0;
  };
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double random = mean_return([&](const std::vector<double>&, const ZoneEnv&) { return Action{u(rng), u(rng), u(rng)}; });
  const double trained = mean_return(agent_policy(ag));
  EXPECT_GT(trained, random);
}
