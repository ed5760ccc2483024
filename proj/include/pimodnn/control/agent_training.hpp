#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <ostream>
#include <vector>

#include "pimodnn/control/env.hpp"
#include "pimodnn/control/evaluate.hpp"
#include "pimodnn/control/sac.hpp"
#include "pimodnn/plant/telemetry_csv.hpp"

namespace pimodnn::control {

inline Action to_action(const std::vector<double>& v) {
  if (v.size() != 3) throw DimensionError("expected a 3-component action");
  return {v[0], v[1], v[2]};
}

inline Policy agent_policy(SacAgent& agent) {
  return [&agent](const std::vector<double>& obs, const ZoneEnv&) { return to_action(agent.act_deterministic(obs)); };
}

struct AgentEpisode {
  int episode = 0;
  double episode_return = 0.0;
  double mean_critic_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;
};

struct AgentTrainReport {
  std::vector<AgentEpisode> episodes;
  std::size_t seeded_transitions = 0;
  double wall_time_s = 0.0;

  [[nodiscard]] nlohmann::json to_json(bool include_wall_time = true) const {
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& e : episodes)
      eps.push_back({{"episode", e.episode},
                     {"return", e.episode_return},
                     {"critic_loss", e.mean_critic_loss},
                     {"alpha", e.alpha},
                     {"entropy", e.entropy}});
    nlohmann::json j = {{"schema_version", 1}, {"seeded_transitions", seeded_transitions}, {"episodes", eps}};
    if (include_wall_time) j["wall_time_s"] = wall_time_s;
    return j;
  }

  void write_curve_csv(std::ostream& os) const {
    os << "episode,return,critic_loss,alpha,entropy\n";
    for (const auto& e : episodes)
      os << e.episode << ',' << plant::format_double(e.episode_return) << ',' << plant::format_double(e.mean_critic_loss)
         << ',' << plant::format_double(e.alpha) << ',' << plant::format_double(e.entropy) << '\n';
  }
};

/// Pushes `episodes` plant episodes driven by the baseline controller into the buffer.
inline std::size_t seed_replay_with_baseline(ReplayBuffer& buf, ZoneEnv& env, int episodes, std::uint64_t seed) {
  std::size_t n = 0;
  for (int e = 0; e < episodes; ++e) {
    auto obs = env.reset(seed + static_cast<std::uint64_t>(e));
    while (!env.done()) {
      const Action a = env.baseline_action();
      auto r = env.step(a);
      buf.push({obs, a, r.reward, r.obs, r.done});
      obs = std::move(r.obs);
      ++n;
    }
  }
  return n;
}

struct AgentTrainOptions {
  std::uint64_t seed = 0;
  ZoneEnv* hybrid_env = nullptr;  // optional plant env for replay pre-seeding
  int hybrid_episodes = 0;
  std::ostream* log = nullptr;
  int log_every = 10;
};

/// Off-policy training loop: uniform random actions for the warm-up steps, then the
/// stochastic policy, with cfg.updates_per_step gradient updates per environment step.
inline AgentTrainReport train_agent(SacAgent& agent, ZoneEnv& env, const AgentTrainOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const SacConfig& cfg = agent.config();
  if (env.config().episode_steps != cfg.episode_steps)
    throw InputError("train_agent: environment episode length differs from the agent config");
  ReplayBuffer buf(cfg.buffer_capacity);
  AgentTrainReport rep;
  if (opt.hybrid_env != nullptr && opt.hybrid_episodes > 0)
    rep.seeded_transitions = seed_replay_with_baseline(buf, *opt.hybrid_env, opt.hybrid_episodes, opt.seed ^ 0xB45EULL);
  std::int64_t steps = 0;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    auto obs = env.reset(opt.seed * 1000003ULL + static_cast<std::uint64_t>(ep));
    AgentEpisode rec;
    rec.episode = ep;
    int n_upd = 0;
    while (!env.done()) {
      const Action a = to_action(steps < cfg.warmup_steps ? agent.act_random() : agent.act_stochastic(obs));
      auto r = env.step(a);
      rec.episode_return += r.reward;
      buf.push({obs, a, r.reward, r.obs, r.done});
      obs = std::move(r.obs);
      ++steps;
      if (steps >= cfg.warmup_steps && buf.size() >= static_cast<std::size_t>(cfg.batch)) {
        for (int u = 0; u < cfg.updates_per_step; ++u) {
          const auto d = agent.update(buf);
          rec.mean_critic_loss += d.critic_loss;
          rec.entropy += d.entropy;
          ++n_upd;
        }
      }
    }
    if (n_upd > 0) {
      rec.mean_critic_loss /= n_upd;
      rec.entropy /= n_upd;
    }
    rec.alpha = agent.alpha();
    rep.episodes.push_back(rec);
    if (opt.log != nullptr && opt.log_every > 0 && (ep + 1) % opt.log_every == 0)
      *opt.log << "episode " << ep + 1 << "/" << cfg.episodes << " return " << rec.episode_return << " alpha "
               << rec.alpha << " entropy " << rec.entropy << '\n';
  }
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace pimodnn::control
