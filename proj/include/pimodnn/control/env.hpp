#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "pimodnn/control/baseline.hpp"
#include "pimodnn/control/reward.hpp"
#include "pimodnn/models/sequence.hpp"
#include "pimodnn/plant/plant.hpp"
#include "pimodnn/plant/weather.hpp"

namespace pimodnn::control {

inline constexpr int kObsDim = 11;
inline constexpr int kActionDim = 3;
inline constexpr int kEpisodeSteps = 192;  // two days of 15-minute steps

using Action = std::array<double, 3>;

/// [T_z, T_out, solar, occupancy, sin tod, cos tod, prev a (3), comfort lo, comfort hi], scaled to O(1).
inline std::vector<double> make_observation(double t_zone, const plant::ExogenousSample& w, const Action& prev,
                                            Range band) {
  const double phase = 2.0 * std::numbers::pi * plant::time_of_day(w.time);
  return {(t_zone - 22.0) / 5.0, (w.t_out - 20.0) / 10.0, w.solar / 1000.0, w.occupancy / 10.0,
          std::sin(phase),       std::cos(phase),         prev[0],          prev[1],
          prev[2],               (band.lo - 22.0) / 5.0,  (band.hi - 22.0) / 5.0};
}

inline models::Disturbance disturbance_of(const plant::ExogenousSample& w) {
  const double phase = 2.0 * std::numbers::pi * plant::time_of_day(w.time);
  return {w.t_out, w.solar, w.occupancy, std::sin(phase), std::cos(phase)};
}

inline plant::ExogenousSample exogenous_of(const plant::TelemetryRecord& r) {
  plant::ExogenousSample s;
  s.time = r.time;
  s.t_out = r.t_out;
  s.solar = r.solar;
  s.occupancy = r.occupancy;
  return s;
}

struct EnvConfig {
  ActionBounds action_bounds;
  ComfortBounds comfort_bounds;
  RewardWeights weights;
  int episode_steps = kEpisodeSteps;
};

struct StepResult {
  std::vector<double> obs;
  double reward = 0.0;
  bool done = false;
  RewardTerms terms;
  MappedAction mapped;
  double u_kw = 0.0;
  double t_zone = 0.0;  // temperature after the step
  plant::Timestamp time = 0;
};

/// Episodic zone environment. Subclasses own the thermal state; the base class owns
/// action mapping, reward and episode bookkeeping.
class ZoneEnv {
 public:
  explicit ZoneEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.action_bounds.validate();
    cfg_.comfort_bounds.validate();
    cfg_.weights.validate();
    if (cfg_.episode_steps < 1) throw InputError("env: episode_steps must be >= 1");
  }
  virtual ~ZoneEnv() = default;

  std::vector<double> reset(std::uint64_t seed) {
    exo_.clear();
    on_reset(seed);
    if (exo_.size() < static_cast<std::size_t>(cfg_.episode_steps) + 1)
      throw ContractError("env: exogenous series shorter than the episode");
    k_ = 0;
    prev_ = {0.0, 0.0, 0.0};
    started_ = true;
    return observation();
  }

  StepResult step(const Action& a) {
    if (!started_) throw ContractError("env: step before reset");
    if (done()) throw ContractError("env: step after episode end");
    for (double v : a)
      if (!std::isfinite(v)) throw ContractError("env: non-finite action");
    const auto& w = exo_[k_];
    StepResult r;
    r.mapped = map_action(a, cfg_.action_bounds, w.time);
    r.u_kw = units::supply_load_kw(r.mapped.q_sup, r.mapped.t_sup, t_zone_);
    const double next = advance(r.u_kw, r.mapped);
    if (!std::isfinite(next)) throw NumericalDivergence("env: non-finite zone temperature");
    const auto& w_next = exo_[k_ + 1];
    r.terms = reward_terms(r.mapped, a, prev_, t_zone_, next, w.t_out, cfg_.comfort_bounds.at(w_next.time),
                           cfg_.action_bounds, cfg_.weights);
    r.reward = r.terms.reward;
    t_zone_ = next;
    prev_ = a;
    ++k_;
    r.done = done();
    r.t_zone = t_zone_;
    r.time = w_next.time;
    r.obs = observation();
    return r;
  }

  [[nodiscard]] bool done() const { return k_ >= static_cast<std::size_t>(cfg_.episode_steps); }
  [[nodiscard]] double t_zone() const { return t_zone_; }
  [[nodiscard]] const plant::ExogenousSample& current() const { return exo_.at(k_); }
  [[nodiscard]] const EnvConfig& config() const { return cfg_; }
  [[nodiscard]] std::vector<double> observation() const {
    const auto& w = exo_.at(k_);
    return make_observation(t_zone_, w, prev_, cfg_.comfort_bounds.at(w.time));
  }

  /// Baseline action for the current state, in normalized form.
  [[nodiscard]] Action baseline_action(const BaselineParams& p = {}) const {
    const auto& w = exo_.at(k_);
    const auto pa = baseline_controller(t_zone_, w.t_out, w.time, cfg_.action_bounds, cfg_.comfort_bounds, p);
    return normalize_action(pa, cfg_.action_bounds, w.time);
  }

 protected:
  /// Fill exo_ (episode_steps + 1 samples) and set t_zone_.
  virtual void on_reset(std::uint64_t seed) = 0;
  /// Apply zone load u over exo_[k_] and return the next zone temperature.
  virtual double advance(double u_kw, const MappedAction& m) = 0;

  EnvConfig cfg_;
  std::vector<plant::ExogenousSample> exo_;
  std::size_t k_ = 0;
  double t_zone_ = 22.0;
  Action prev_{};
  bool started_ = false;
};

/// Training environment: a trained thermal model driven by telemetry weather, warmed up
/// on the encoder history preceding a randomly drawn start record.
class ModelEnv : public ZoneEnv {
 public:
  ModelEnv(const models::ThermalModel& model, std::vector<plant::TelemetryRecord> pool, EnvConfig cfg = {})
      : ZoneEnv(std::move(cfg)), model_(model.clone()), pool_(std::move(pool)) {
    const auto enc = static_cast<std::size_t>(model_->config().encoder_len);
    if (pool_.size() < enc + static_cast<std::size_t>(cfg_.episode_steps) + 1)
      throw InputError("ModelEnv: telemetry pool too short for warm-up plus one episode");
  }

  [[nodiscard]] std::size_t start_record() const { return start_; }
  [[nodiscard]] models::ThermalModel& model() { return *model_; }

 protected:
  void on_reset(std::uint64_t seed) override {
    const auto enc = static_cast<std::size_t>(model_->config().encoder_len);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> d(enc - 1, pool_.size() - static_cast<std::size_t>(cfg_.episode_steps) - 2);
    start_ = d(rng);
    state_ = models::encode(*model_, std::span<const plant::TelemetryRecord>(pool_).subspan(start_ + 1 - enc, enc));
    t_zone_ = state_.t_zone_c;
    for (std::size_t k = 0; k <= static_cast<std::size_t>(cfg_.episode_steps); ++k)
      exo_.push_back(exogenous_of(pool_[start_ + k]));
  }

  double advance(double u_kw, const MappedAction&) override {
    return models::decode_step(*model_, state_, u_kw, disturbance_of(exo_[k_]));
  }

 private:
  std::unique_ptr<models::ThermalModel> model_;
  std::vector<plant::TelemetryRecord> pool_;
  models::ModelState state_;
  std::size_t start_ = 0;
};

struct PlantEnvConfig {
  plant::PlantParams plant;
  plant::WeatherParams weather;
  int warmup_days = 2;
  int start_day_spread = 60;  // episode start drawn uniformly from this many days after weather.start
  plant::PlantState initial{22.0, 22.0};
};

/// Validation environment: the RC plant on seeded synthetic weather, warmed up under the
/// baseline controller. Observed temperature is the true state (no sensor noise).
class PlantEnv : public ZoneEnv {
 public:
  PlantEnv(PlantEnvConfig pcfg, EnvConfig cfg = {}) : ZoneEnv(std::move(cfg)), pcfg_(std::move(pcfg)) {
    pcfg_.plant.validate();
    if (pcfg_.warmup_days < 0 || pcfg_.start_day_spread < 0) throw InputError("PlantEnv: negative day count");
  }

  [[nodiscard]] const plant::PlantState& state() const { return state_; }

 protected:
  void on_reset(std::uint64_t seed) override {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> day(0, pcfg_.start_day_spread);
    plant::WeatherParams wp = pcfg_.weather;
    wp.start += static_cast<plant::Timestamp>(day(rng)) * plant::kSecondsPerDay;
    const int per_day = static_cast<int>(std::lround(plant::kSecondsPerDay / wp.step_s));
    const int ep_days = (cfg_.episode_steps + per_day) / per_day + 1;
    const auto w = plant::generate_weather(pcfg_.warmup_days + ep_days, rng(), wp);
    state_ = pcfg_.initial;
    const std::size_t warm = static_cast<std::size_t>(pcfg_.warmup_days * per_day);
    for (std::size_t k = 0; k < warm; ++k) {
      const auto pa = baseline_controller(state_.t_zone, w[k].t_out, w[k].time, cfg_.action_bounds, cfg_.comfort_bounds);
      state_ = plant::plant_step(state_, units::supply_load_kw(pa.q_sup, pa.t_sup, state_.t_zone), w[k], pcfg_.plant);
    }
    exo_.assign(w.begin() + static_cast<std::ptrdiff_t>(warm), w.end());
    t_zone_ = state_.t_zone;
  }

  double advance(double u_kw, const MappedAction&) override {
    state_ = plant::plant_step(state_, u_kw, exo_[k_], pcfg_.plant);
    return state_.t_zone;
  }

 private:
  PlantEnvConfig pcfg_;
  plant::PlantState state_;
};

}  // namespace pimodnn::control
