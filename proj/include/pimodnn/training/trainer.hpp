#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pimodnn/models/pi_modnn.hpp"
#include "pimodnn/models/recurrent_baseline.hpp"
#include "pimodnn/models/sequence.hpp"
#include "pimodnn/training/losses.hpp"
#include "pimodnn/training/windows.hpp"

namespace pimodnn::training {

using models::ThermalModel;

enum class PhaseSchedule {
  /// Encoder pass then decoder pass inside every epoch.
  Interleaved,
  /// Encoder-only epochs first, then decoder-only epochs.
  Sequential,
};

struct TrainConfig {
  int epochs = 200;
  int patience = 10;
  double lr = 0.01;
  int batch_size = 32;
  double p_mix = 0.5;
  int stride = 4;
  double val_fraction = 0.2;
  PhaseSchedule schedule = PhaseSchedule::Interleaved;
  int encoder_epochs = 20;  // Sequential only
  /// Test hook: replaces the computed validation loss of an epoch.
  std::function<double(int epoch, double computed)> val_override;
  std::ostream* log = nullptr;
};

/// Stops once `patience` epochs pass without a strict improvement.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {
    if (patience < 1) throw InputError("EarlyStopper: patience must be >= 1");
  }

  /// Returns true when `value` is a new best.
  bool update(int epoch, double value) {
    if (value < best_) {
      best_ = value;
      best_epoch_ = epoch;
      return true;
    }
    return false;
  }

  [[nodiscard]] bool should_stop(int epoch) const { return best_epoch_ >= 0 && epoch - best_epoch_ >= patience_; }
  [[nodiscard]] int best_epoch() const { return best_epoch_; }
  [[nodiscard]] double best() const { return best_; }

 private:
  int patience_;
  int best_epoch_ = -1;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochStats {
  int epoch = 0;
  double train_total = 0.0;
  double train_acc = 0.0;
  double train_fluct = 0.0;
  double train_encoder = 0.0;  // phase-1 total; 0 when the phase did not run
  double val_total = 0.0;
  bool constraints_ok = true;
};

struct TrainReport {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<EpochStats> epochs;
  int stop_epoch = 0;
  int best_epoch = 0;
  double best_val = 0.0;
  double wall_time_s = 0.0;
  std::size_t train_windows = 0;
  std::size_t val_windows = 0;

  [[nodiscard]] nlohmann::json to_json(bool include_wall_time = true) const {
    nlohmann::json ep = nlohmann::json::array();
    for (const auto& e : epochs)
      ep.push_back({{"epoch", e.epoch},
                    {"train_total", e.train_total},
                    {"train_acc", e.train_acc},
                    {"train_fluct", e.train_fluct},
                    {"train_encoder", e.train_encoder},
                    {"val_total", e.val_total}});
    nlohmann::json j = {{"schema_version", 1},
                        {"variant", variant},
                        {"seed", seed},
                        {"epochs", ep},
                        {"stop_epoch", stop_epoch},
                        {"best_epoch", best_epoch},
                        {"best_val", best_val},
                        {"train_windows", train_windows},
                        {"val_windows", val_windows}};
    if (include_wall_time) j["wall_time_s"] = wall_time_s;
    return j;
  }

  void write_loss_csv(std::ostream& os) const {
    os << "epoch,train_total,train_acc,train_fluct,val_total\n";
    for (const auto& e : epochs) {
      nlohmann::json row = {e.train_total, e.train_acc, e.train_fluct, e.val_total};
      os << e.epoch << ',' << row[0].dump() << ',' << row[1].dump() << ',' << row[2].dump() << ',' << row[3].dump()
         << '\n';
    }
  }
};

namespace detail {

inline std::vector<models::Episode> episodes(std::span<const plant::TelemetryRecord> records,
                                             std::span<const std::size_t> starts, int enc, int dec) {
  std::vector<models::Episode> out;
  out.reserve(starts.size());
  for (std::size_t s : starts) out.push_back(models::episode_at(records, s, enc, dec));
  return out;
}

/// Predictions/measurements for sequence indices [first, last] as rows x N matrices in degC.
inline LossTerms sequence_loss(numerics::Tape& t, const std::vector<Var>& preds, const models::SequenceBatch& b,
                               int first, int last, double temp_scale, double alpha) {
  std::vector<Var> cols;
  numerics::Tensor2 meas(b.rows, last - first + 1);
  for (int k = first; k <= last; ++k) {
    cols.push_back(preds[static_cast<std::size_t>(k - 1)]);
    meas.col(k - first) = b.x_meas[static_cast<std::size_t>(k)].col(0);
  }
  Var p = numerics::scale(numerics::concat_cols(cols), temp_scale);
  Var m = t.constant(std::move(meas) * temp_scale);
  return loss_terms(m, p, alpha);
}

struct PhaseResult {
  double total = 0.0;
  double acc = 0.0;
  double fluct = 0.0;
};

}  // namespace detail

/// Decoder-phase loss (closed loop, decoder steps only) without gradients.
inline detail::PhaseResult evaluate_decoder_loss(ThermalModel& model, std::span<const models::Episode> eps,
                                                 int batch_size) {
  detail::PhaseResult r;
  std::size_t n = 0;
  for (std::size_t i = 0; i < eps.size(); i += static_cast<std::size_t>(batch_size)) {
    const auto cnt = std::min<std::size_t>(static_cast<std::size_t>(batch_size), eps.size() - i);
    auto b = models::make_batch(model, eps.subspan(i, cnt));
    numerics::Tape t;
    auto s = model.session(t, false);
    auto preds = models::run_sequence(*s, t, b, models::RunMode::Decode);
    auto lt = detail::sequence_loss(t, preds, b, b.enc, b.enc + b.dec - 1, model.stats().temp_scale(), model.alpha());
    const double w = static_cast<double>(cnt);
    r.total += w * t.value(lt.total)(0, 0);
    r.acc += w * t.value(lt.accuracy)(0, 0);
    if (lt.has_fluctuation) r.fluct += w * t.value(lt.fluctuation)(0, 0);
    n += cnt;
  }
  if (n > 0) {
    r.total /= static_cast<double>(n);
    r.acc /= static_cast<double>(n);
    r.fluct /= static_cast<double>(n);
  }
  return r;
}

struct TrainData {
  std::vector<models::Episode> train;
  std::vector<models::Episode> validation;
  models::NormStats stats;
};

inline TrainData prepare_training_data(std::span<const plant::TelemetryRecord> records, const models::ModelConfig& mc,
                                       const TrainConfig& tc) {
  const int enc = mc.encoder_len, dec = mc.decoder_len;
  const auto starts = make_windows(records, enc, dec, tc.stride);
  auto split = split_windows(starts, records.size(), enc, dec, tc.val_fraction);
  if (split.train.empty()) throw InputError("train: no training windows; dataset too short");
  if (split.validation.empty()) {
    // guarantee at least the final window for validation
    const std::size_t last = records.size() - static_cast<std::size_t>(enc + dec);
    if (static_cast<std::size_t>(last + enc) < split.boundary)
      throw InputError("train: dataset leaves no validation window");
    split.validation.push_back(last);
  }
  TrainData d;
  d.stats = models::compute_stats(records.first(split.boundary));
  d.train = detail::episodes(records, split.train, enc, dec);
  d.validation = detail::episodes(records, split.validation, enc, dec);
  return d;
}

/// Trains in place. Normalization statistics are set from the training period.
inline TrainReport train(ThermalModel& model, std::span<const plant::TelemetryRecord> records, const TrainConfig& tc,
                         std::uint64_t seed, const std::string& variant = "") {
  if (tc.epochs < 1 || tc.batch_size < 1) throw InputError("train: epochs and batch_size must be >= 1");
  if (!(tc.p_mix >= 0.0 && tc.p_mix <= 1.0)) throw InputError("train: p_mix must be in [0, 1]");
  if (!(tc.lr > 0.0)) throw InputError("train: lr must be > 0");
  const auto t0 = std::chrono::steady_clock::now();
  TrainData data = prepare_training_data(records, model.config(), tc);
  model.set_stats(data.stats);

  TrainReport rep;
  rep.variant = variant;
  rep.seed = seed;
  rep.train_windows = data.train.size();
  rep.val_windows = data.validation.size();

  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  EarlyStopper stopper(tc.patience);
  auto best = model.clone();
  const double scale_c = model.stats().temp_scale();
  const double alpha = model.alpha();
  const auto sets = model.param_sets();
  std::vector<std::size_t> order(data.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const bool run_enc = tc.schedule == PhaseSchedule::Interleaved || epoch <= tc.encoder_epochs;
    const bool run_dec = tc.schedule == PhaseSchedule::Interleaved || epoch > tc.encoder_epochs;
    EpochStats es;
    es.epoch = epoch;
    double enc_sum = 0.0, tot_sum = 0.0, acc_sum = 0.0, fl_sum = 0.0;
    std::size_t seen = 0;
    int batch_no = 0;
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(tc.batch_size), ++batch_no) {
      const auto cnt = std::min<std::size_t>(static_cast<std::size_t>(tc.batch_size), order.size() - i);
      std::vector<models::Episode> eps;
      eps.reserve(cnt);
      for (std::size_t j = 0; j < cnt; ++j) eps.push_back(data.train[order[i + j]]);
      const auto b = models::make_batch(model, eps);
      auto optimise = [&](models::RunMode mode, int first, int last) {
        numerics::Tape t;
        auto s = model.session(t, true);
        std::vector<Var> preds;
        LossTerms lt;
        try {
          preds = models::run_sequence(*s, t, b, mode, tc.p_mix, &rng);
          lt = detail::sequence_loss(t, preds, b, first, last, scale_c, alpha);
        } catch (const NumericalDivergence& e) {
          throw NumericalDivergence("train: epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_no) +
                                    ": " + e.what());
        }
        const double v = t.value(lt.total)(0, 0);
        if (!std::isfinite(v))
          throw NumericalDivergence("train: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                                    std::to_string(batch_no));
        for (auto* ps : sets) ps->zero_grad();
        t.backward(lt.total);
        for (auto* ps : sets) ps->adam_step(tc.lr);
        model.project_constraints();
        detail::PhaseResult r{v, t.value(lt.accuracy)(0, 0), lt.has_fluctuation ? t.value(lt.fluctuation)(0, 0) : 0.0};
        return r;
      };
      const double w = static_cast<double>(cnt);
      if (run_enc) enc_sum += w * optimise(models::RunMode::Mixed, 1, b.transitions()).total;
      if (run_dec) {
        auto r = optimise(models::RunMode::Decode, b.enc, b.transitions());
        tot_sum += w * r.total;
        acc_sum += w * r.acc;
        fl_sum += w * r.fluct;
      }
      seen += cnt;
    }
    const double n = static_cast<double>(seen);
    es.train_encoder = enc_sum / n;
    es.train_total = tot_sum / n;
    es.train_acc = acc_sum / n;
    es.train_fluct = fl_sum / n;
    es.val_total = evaluate_decoder_loss(model, data.validation, 64).total;
    if (tc.val_override) es.val_total = tc.val_override(epoch, es.val_total);
    if (!std::isfinite(es.val_total))
      throw NumericalDivergence("train: non-finite validation loss at epoch " + std::to_string(epoch));
    for (auto* ps : sets)
      if (!ps->satisfies_constraints()) throw ContractError("train: constrained weight went negative");
    if (!model.satisfies_constraints()) throw ContractError("train: model constraint violated after projection");
    rep.epochs.push_back(es);
    // only decoder-trained epochs compete for the checkpoint under the sequential schedule
    if (run_dec && stopper.update(epoch, es.val_total)) best = model.clone();
    if (tc.log != nullptr)
      *tc.log << variant << " epoch " << epoch << " train " << es.train_total << " enc " << es.train_encoder
              << " val " << es.val_total << '\n';
    rep.stop_epoch = epoch;
    if (run_dec && stopper.should_stop(epoch)) break;
  }
  // restore the best checkpoint
  auto dst = model.named_param_sets();
  auto src = best->named_param_sets();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i].second->copy_values_from(*src[i].second);
  rep.best_epoch = stopper.best_epoch();
  rep.best_val = stopper.best();
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace pimodnn::training
