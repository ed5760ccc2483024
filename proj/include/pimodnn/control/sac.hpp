#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pimodnn/control/replay.hpp"
#include "pimodnn/numerics/layers.hpp"

namespace pimodnn::control {

using numerics::ParamSet;
using numerics::Tape;
using numerics::Tensor2;
using numerics::Var;

struct SacConfig {
  int hidden = 64;
  double lr = 1e-4;
  double alpha_lr = 1e-4;
  int batch = 2048;
  double tau = 0.05;
  double gamma = 0.98;
  int episode_steps = 192;
  int max_episodes = 1000;  // hard cap on training episodes
  int episodes = 200;
  bool auto_alpha = true;
  double init_alpha = 1.0;
  double target_entropy = -3.0;
  double reward_scale = 1.0;  // rewards are multiplied by this before entering the critic targets
  std::size_t buffer_capacity = 100000;
  int warmup_steps = 2000;  // uniform random actions before the first update
  int updates_per_step = 1;
  double log_std_min = -5.0;
  double log_std_max = 1.0;

  void validate() const {
    if (hidden < 1 || batch < 1 || episode_steps < 1 || max_episodes < 1 || episodes < 0)
      throw InputError("SacConfig: sizes must be positive");
    if (episodes > max_episodes) throw InputError("SacConfig: episodes exceeds max_episodes");
    if (!(tau > 0.0 && tau <= 1.0)) throw InputError("SacConfig: tau must be in (0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("SacConfig: gamma must be in [0, 1)");
    if (!(lr >= 0.0) || !(alpha_lr >= 0.0)) throw InputError("SacConfig: learning rates must be >= 0");
    if (!(init_alpha > 0.0)) throw InputError("SacConfig: init_alpha must be > 0");
    if (!(reward_scale > 0.0)) throw InputError("SacConfig: reward_scale must be > 0");
    if (buffer_capacity < static_cast<std::size_t>(batch)) throw InputError("SacConfig: buffer smaller than a batch");
    if (updates_per_step < 0 || warmup_steps < 0) throw InputError("SacConfig: negative step counts");
    if (!(log_std_min < log_std_max)) throw InputError("SacConfig: log_std_min must be below log_std_max");
  }
};

inline nlohmann::json sac_config_to_json(const SacConfig& c) {
  return {{"hidden", c.hidden},
          {"lr", c.lr},
          {"alpha_lr", c.alpha_lr},
          {"batch", c.batch},
          {"tau", c.tau},
          {"gamma", c.gamma},
          {"episode_steps", c.episode_steps},
          {"max_episodes", c.max_episodes},
          {"episodes", c.episodes},
          {"auto_alpha", c.auto_alpha},
          {"init_alpha", c.init_alpha},
          {"target_entropy", c.target_entropy},
          {"reward_scale", c.reward_scale},
          {"buffer_capacity", c.buffer_capacity},
          {"warmup_steps", c.warmup_steps},
          {"updates_per_step", c.updates_per_step},
          {"log_std_min", c.log_std_min},
          {"log_std_max", c.log_std_max}};
}

inline SacConfig sac_config_from_json(const nlohmann::json& j, SacConfig c = {}) {
  if (!j.is_object()) throw InputError("SacConfig: expected an object");
  for (const auto& [k, v] : j.items()) {
    try {
      if (k == "hidden") c.hidden = v.get<int>();
      else if (k == "lr") c.lr = v.get<double>();
      else if (k == "alpha_lr") c.alpha_lr = v.get<double>();
      else if (k == "batch") c.batch = v.get<int>();
      else if (k == "tau") c.tau = v.get<double>();
      else if (k == "gamma") c.gamma = v.get<double>();
      else if (k == "episode_steps") c.episode_steps = v.get<int>();
      else if (k == "max_episodes") c.max_episodes = v.get<int>();
      else if (k == "episodes") c.episodes = v.get<int>();
      else if (k == "auto_alpha") c.auto_alpha = v.get<bool>();
      else if (k == "init_alpha") c.init_alpha = v.get<double>();
      else if (k == "target_entropy") c.target_entropy = v.get<double>();
      else if (k == "reward_scale") c.reward_scale = v.get<double>();
      else if (k == "buffer_capacity") c.buffer_capacity = v.get<std::size_t>();
      else if (k == "warmup_steps") c.warmup_steps = v.get<int>();
      else if (k == "updates_per_step") c.updates_per_step = v.get<int>();
      else if (k == "log_std_min") c.log_std_min = v.get<double>();
      else if (k == "log_std_max") c.log_std_max = v.get<double>();
      else throw InputError("SacConfig: unknown key '" + k + "'");
    } catch (const nlohmann::json::exception&) {
      throw InputError("SacConfig: bad value for '" + k + "'");
    }
  }
  c.validate();
  return c;
}

struct SacDiagnostics {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;  // -mean log pi
  double mean_q = 0.0;
};

/// Squashed-Gaussian actor, twin critics with Polyak targets, optional automatic entropy
/// temperature.
class SacAgent {
 public:
  SacAgent(int obs_dim, int act_dim, SacConfig cfg, std::uint64_t seed)
      : cfg_(cfg), obs_dim_(obs_dim), act_dim_(act_dim), rng_(seed) {
    cfg_.validate();
    if (obs_dim < 1 || act_dim < 1) throw InputError("SacAgent: dimensions must be positive");
    numerics::Rng init(seed ^ 0x5AC0ULL);
    numerics::add_mlp(actor_, actor_spec(), init, {}, 0.1);
    numerics::add_mlp(q1_, critic_spec("q1"), init);
    numerics::add_mlp(q2_, critic_spec("q2"), init);
    q1_target_ = clone_values(q1_);
    q2_target_ = clone_values(q2_);
    log_alpha_.add("log_alpha", numerics::scalar_tensor(std::log(cfg_.init_alpha)));
  }

  [[nodiscard]] const SacConfig& config() const { return cfg_; }
  [[nodiscard]] int obs_dim() const { return obs_dim_; }
  [[nodiscard]] int act_dim() const { return act_dim_; }
  [[nodiscard]] double alpha() const { return std::exp(log_alpha_.value("log_alpha")(0, 0)); }
  [[nodiscard]] std::int64_t updates() const { return updates_; }

  ParamSet& actor() { return actor_; }
  ParamSet& q1() { return q1_; }
  ParamSet& q2() { return q2_; }
  ParamSet& q1_target() { return q1_target_; }
  ParamSet& q2_target() { return q2_target_; }
  [[nodiscard]] const ParamSet& q1_target() const { return q1_target_; }
  [[nodiscard]] const ParamSet& q2_target() const { return q2_target_; }

  /// Deterministic action tanh(mean).
  [[nodiscard]] std::vector<double> act_deterministic(const std::vector<double>& obs) {
    Tape t;
    auto [mu, log_std] = policy_head(t, constant_rows(t, {obs}), false);
    (void)log_std;
    const Tensor2 a = t.value(mu).array().tanh().matrix();
    return {a.data(), a.data() + a.size()};
  }

  /// Stochastic action for exploration.
  [[nodiscard]] std::vector<double> act_stochastic(const std::vector<double>& obs) {
    Tape t;
    auto [mu, log_std] = policy_head(t, constant_rows(t, {obs}), false);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> a(static_cast<std::size_t>(act_dim_));
    for (int i = 0; i < act_dim_; ++i)
      a[static_cast<std::size_t>(i)] = std::tanh(t.value(mu)(0, i) + std::exp(t.value(log_std)(0, i)) * n(rng_));
    return a;
  }

  [[nodiscard]] std::vector<double> act_random() {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> a(static_cast<std::size_t>(act_dim_));
    for (double& v : a) v = u(rng_);
    return a;
  }

  /// One gradient step on critics, actor and temperature from a uniform batch, then a
  /// Polyak update of the target critics.
  SacDiagnostics update(const ReplayBuffer& buf) {
    const auto idx = buf.sample_indices(static_cast<std::size_t>(cfg_.batch), rng_);
    std::vector<const Transition*> batch;
    batch.reserve(idx.size());
    for (auto i : idx) batch.push_back(&buf.at(i));
    return update_on(batch);
  }

  SacDiagnostics update_on(const std::vector<const Transition*>& batch) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    Tensor2 s(b, obs_dim_), a(b, act_dim_), r(b, 1), s2(b, obs_dim_), nd(b, 1);
    for (Eigen::Index i = 0; i < b; ++i) {
      const auto& tr = *batch[static_cast<std::size_t>(i)];
      if (static_cast<int>(tr.obs.size()) != obs_dim_ || static_cast<int>(tr.next_obs.size()) != obs_dim_)
        throw DimensionError("SacAgent: transition observation width mismatch");
      for (int c = 0; c < obs_dim_; ++c) {
        s(i, c) = tr.obs[static_cast<std::size_t>(c)];
        s2(i, c) = tr.next_obs[static_cast<std::size_t>(c)];
      }
      for (int c = 0; c < act_dim_; ++c) a(i, c) = tr.action[static_cast<std::size_t>(c)];
      r(i, 0) = tr.reward * cfg_.reward_scale;
      nd(i, 0) = tr.done ? 0.0 : 1.0;
    }
    SacDiagnostics d;
    const double alpha_now = alpha();
    d.alpha = alpha_now;

    // Bellman targets, no gradient
    Tensor2 y;
    {
      Tape t;
      Var sv = t.constant(s2);
      auto [a2, logp2] = sample_action(t, sv, false);
      Var q1t = critic(t, q1_target_, "q1", sv, a2, false);
      Var q2t = critic(t, q2_target_, "q2", sv, a2, false);
      const Tensor2 qmin = t.value(q1t).cwiseMin(t.value(q2t));
      y = r + cfg_.gamma * nd.cwiseProduct(qmin - alpha_now * t.value(logp2));
    }

    // critics
    {
      q1_.zero_grad();
      q2_.zero_grad();
      Tape t;
      Var sv = t.constant(s), av = t.constant(a), yv = t.constant(y);
      Var q1v = critic(t, q1_, "q1", sv, av, true);
      Var q2v = critic(t, q2_, "q2", sv, av, true);
      Var loss = add(mean(square(sub(q1v, yv))), mean(square(sub(q2v, yv))));
      d.critic_loss = t.value(loss)(0, 0);
      d.mean_q = t.value(q1v).mean();
      check_finite(d.critic_loss, "critic loss");
      t.backward(loss);
      q1_.adam_step(cfg_.lr);
      q2_.adam_step(cfg_.lr);
    }

    // actor and temperature
    double mean_logp = 0.0;
    {
      actor_.zero_grad();
      Tape t;
      Var sv = t.constant(s);
      auto [pa, logp] = sample_action(t, sv, true);
      Var q1v = critic(t, q1_, "q1", sv, pa, false);
      Var q2v = critic(t, q2_, "q2", sv, pa, false);
      Var loss = mean(sub(scale(logp, alpha_now), minimum(q1v, q2v)));
      d.actor_loss = t.value(loss)(0, 0);
      mean_logp = t.value(logp).mean();
      check_finite(d.actor_loss, "actor loss");
      t.backward(loss);
      actor_.adam_step(cfg_.lr);
    }
    d.entropy = -mean_logp;
    if (cfg_.auto_alpha) {
      // loss = -log_alpha * (log pi + target_entropy), averaged over the batch
      auto& p = log_alpha_.at("log_alpha");
      p.grad(0, 0) = -(mean_logp + cfg_.target_entropy);
      log_alpha_.adam_step(cfg_.alpha_lr);
      check_finite(p.value(0, 0), "entropy temperature");
    }

    q1_target_.polyak_from(q1_, cfg_.tau);
    q2_target_.polyak_from(q2_, cfg_.tau);
    ++updates_;
    return d;
  }

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"format", "pimodnn.agent"},
            {"schema_version", 1},
            {"obs_dim", obs_dim_},
            {"act_dim", act_dim_},
            {"config", sac_config_to_json(cfg_)},
            {"updates", updates_},
            {"params",
             {{"actor", actor_.to_json()},
              {"q1", q1_.to_json()},
              {"q2", q2_.to_json()},
              {"q1_target", q1_target_.to_json()},
              {"q2_target", q2_target_.to_json()},
              {"log_alpha", log_alpha_.to_json()}}}};
  }

  static SacAgent from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "pimodnn.agent")
      throw InputError("agent checkpoint: expected format 'pimodnn.agent'");
    if (j.value("schema_version", 0) != 1) throw InputError("agent checkpoint: unsupported schema_version");
    try {
      SacAgent ag(j.at("obs_dim").get<int>(), j.at("act_dim").get<int>(), sac_config_from_json(j.at("config")), 0);
      const auto& p = j.at("params");
      ag.actor_.copy_values_from(ParamSet::from_json(p.at("actor")));
      ag.q1_.copy_values_from(ParamSet::from_json(p.at("q1")));
      ag.q2_.copy_values_from(ParamSet::from_json(p.at("q2")));
      ag.q1_target_.copy_values_from(ParamSet::from_json(p.at("q1_target")));
      ag.q2_target_.copy_values_from(ParamSet::from_json(p.at("q2_target")));
      ag.log_alpha_.copy_values_from(ParamSet::from_json(p.at("log_alpha")));
      ag.updates_ = j.value("updates", std::int64_t{0});
      return ag;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("agent checkpoint: ") + e.what());
    } catch (const std::out_of_range& e) {
      throw InputError(std::string("agent checkpoint: ") + e.what());
    }
  }

 private:
  [[nodiscard]] numerics::MlpSpec actor_spec() const {
    return {"pi", {obs_dim_, cfg_.hidden, cfg_.hidden, 2 * act_dim_}, numerics::ActivationKind::Relu};
  }
  [[nodiscard]] numerics::MlpSpec critic_spec(const std::string& name) const {
    return {name, {obs_dim_ + act_dim_, cfg_.hidden, cfg_.hidden, 1}, numerics::ActivationKind::Relu};
  }

  static ParamSet clone_values(const ParamSet& src) {
    ParamSet out;
    for (const auto& n : src.names()) out.add(n, src.value(n));
    return out;
  }

  static Var constant_rows(Tape& t, const std::vector<std::vector<double>>& rows) {
    Tensor2 m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t c = 0; c < rows[i].size(); ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    return t.constant(std::move(m));
  }

  std::pair<Var, Var> policy_head(Tape& t, Var s, bool track) {
    Var out = numerics::mlp(t, actor_, actor_spec(), s, track);
    Var mu = numerics::slice_cols(out, 0, act_dim_);
    // smooth squash of the raw log-std into [min, max]
    Var raw = numerics::slice_cols(out, act_dim_, act_dim_);
    const double lo = cfg_.log_std_min, hi = cfg_.log_std_max;
    Var log_std = numerics::add_scalar(numerics::scale(numerics::add_scalar(numerics::tanh(raw), 1.0), 0.5 * (hi - lo)), lo);
    return {mu, log_std};
  }

  /// Reparameterized sample and its log-density under the squashed Gaussian.
  std::pair<Var, Var> sample_action(Tape& t, Var s, bool track) {
    using namespace numerics;
    auto [mu, log_std] = policy_head(t, s, track);
    const Eigen::Index rows = t.value(mu).rows();
    Tensor2 eps(rows, act_dim_);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = n(rng_);
    Var pre = add(mu, mul(exp(log_std), t.constant(eps)));
    Var act = tanh(pre);
    // log N(eps) - sum log_std - sum log(1 - tanh(pre)^2), the last via 2(log 2 - x - softplus(-2x))
    const double c = -0.5 * std::log(2.0 * std::numbers::pi);
    Tensor2 gauss = (-0.5 * eps.array().square() + c).matrix();
    Var log_jac = scale(add_scalar(add(pre, softplus(scale(pre, -2.0))), -std::log(2.0)), -2.0);
    Var logp = sum_cols(sub(sub(t.constant(gauss), log_std), log_jac));
    return {act, logp};
  }

  Var critic(Tape& t, ParamSet& ps, const std::string& name, Var s, Var a, bool track) {
    return numerics::mlp(t, ps, critic_spec(name), numerics::concat_cols({s, a}), track);
  }

  void check_finite(double v, const char* what) const {
    if (!std::isfinite(v))
      throw NumericalDivergence(std::string("SAC update ") + std::to_string(updates_) + ": non-finite " + what +
                                " (alpha " + std::to_string(alpha()) + ")");
  }

  SacConfig cfg_;
  int obs_dim_;
  int act_dim_;
  std::mt19937_64 rng_;
  ParamSet actor_, q1_, q2_, q1_target_, q2_target_, log_alpha_;
  std::int64_t updates_ = 0;
};

}  // namespace pimodnn::control
