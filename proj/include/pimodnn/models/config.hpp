#pragma once

#include <nlohmann/json.hpp>

#include <string>

#include "pimodnn/numerics/errors.hpp"

namespace pimodnn::models {

struct LayerDims {
  int in = 1;
  int hidden = 16;
  int out = 1;

  bool operator==(const LayerDims&) const = default;
};

struct ModelFlags {
  bool physics_structure = true;
  bool fluctuation_loss = true;
  bool hard_constraints = true;

  bool operator==(const ModelFlags&) const = default;
};

enum class DisturbanceNet { Gru, WindowMlp };

inline std::string to_string(DisturbanceNet d) { return d == DisturbanceNet::Gru ? "gru" : "window_mlp"; }

inline DisturbanceNet disturbance_net_from_string(const std::string& s) {
  if (s == "gru") return DisturbanceNet::Gru;
  if (s == "window_mlp") return DisturbanceNet::WindowMlp;
  throw InputError("unknown disturbance network '" + s + "' (valid: gru, window_mlp)");
}

/// Architecture and loss configuration. Defaults follow the published hyperparameter table.
struct ModelConfig {
  LayerDims fnna{1, 16, 1};
  LayerDims fnnb{1, 3, 1};
  LayerDims fnne{6, 16, 1};
  int encoder_len = 96;
  int decoder_len = 96;
  /// Look-back width of the windowed fully connected disturbance network.
  /// Unused by the default recurrent disturbance network.
  int window_len = 8;
  ModelFlags flags;
  double alpha = 1.0;
  /// kW mapped to 1.0 at the control-network input. A fixed scale keeps the sign of u.
  double u_scale_kw = 4.0;
  DisturbanceNet disturbance = DisturbanceNet::Gru;
  int baseline_hidden = 16;

  bool operator==(const ModelConfig&) const = default;

  void validate() const {
    if (fnna.in != 1 || fnna.out != 1) throw InputError("model: f_NNA must map 1 -> 1");
    if (fnnb.in != 1 || fnnb.out != 1) throw InputError("model: f_NNB must map 1 -> 1");
    if (fnne.in != 6 || fnne.out != 1) throw InputError("model: f_NNE must map 6 -> 1");
    if (fnna.hidden < 1 || fnnb.hidden < 1 || fnne.hidden < 1 || baseline_hidden < 1)
      throw InputError("model: hidden widths must be >= 1");
    if (encoder_len < 1 || decoder_len < 1 || window_len < 1) throw InputError("model: lengths must be >= 1");
    if (!(alpha >= 0.0)) throw InputError("model: alpha must be >= 0");
    if (!(u_scale_kw > 0.0)) throw InputError("model: u_scale_kw must be > 0");
  }
};

inline void to_json(nlohmann::json& j, const LayerDims& d) { j = {d.in, d.hidden, d.out}; }
inline void from_json(const nlohmann::json& j, LayerDims& d) {
  if (!j.is_array() || j.size() != 3) throw InputError("layer dims must be [in, hidden, out]");
  d = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"fnna", c.fnna},
          {"fnnb", c.fnnb},
          {"fnne", c.fnne},
          {"encoder_len", c.encoder_len},
          {"decoder_len", c.decoder_len},
          {"window_len", c.window_len},
          {"physics_structure", c.flags.physics_structure},
          {"fluctuation_loss", c.flags.fluctuation_loss},
          {"hard_constraints", c.flags.hard_constraints},
          {"alpha", c.alpha},
          {"u_scale_kw", c.u_scale_kw},
          {"disturbance_net", to_string(c.disturbance)},
          {"baseline_hidden", c.baseline_hidden}};
}

/// Reads keys present in `j` over `base`; unknown keys are rejected.
inline ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {}) {
  for (const auto& [key, v] : j.items()) {
    if (key == "fnna") base.fnna = v.get<LayerDims>();
    else if (key == "fnnb") base.fnnb = v.get<LayerDims>();
    else if (key == "fnne") base.fnne = v.get<LayerDims>();
    else if (key == "encoder_len") base.encoder_len = v.get<int>();
    else if (key == "decoder_len") base.decoder_len = v.get<int>();
    else if (key == "window_len") base.window_len = v.get<int>();
    else if (key == "physics_structure") base.flags.physics_structure = v.get<bool>();
    else if (key == "fluctuation_loss") base.flags.fluctuation_loss = v.get<bool>();
    else if (key == "hard_constraints") base.flags.hard_constraints = v.get<bool>();
    else if (key == "alpha") base.alpha = v.get<double>();
    else if (key == "u_scale_kw") base.u_scale_kw = v.get<double>();
    else if (key == "disturbance_net") base.disturbance = disturbance_net_from_string(v.get<std::string>());
    else if (key == "baseline_hidden") base.baseline_hidden = v.get<int>();
    else throw InputError("model config: unknown key '" + key + "'");
  }
  base.validate();
  return base;
}

}  // namespace pimodnn::models
