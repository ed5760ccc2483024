#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <memory>
#include <string>

#include "pimodnn/models/pi_modnn.hpp"
#include "pimodnn/models/recurrent_baseline.hpp"

namespace pimodnn::models {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "pimodnn.model";

inline nlohmann::json checkpoint_json(ThermalModel& model, const std::string& variant) {
  nlohmann::json params = nlohmann::json::object();
  for (auto& [name, ps] : model.named_param_sets()) params[name] = ps->to_json();
  return {{"format", kCheckpointFormat},
          {"schema_version", kCheckpointVersion},
          {"kind", model.kind()},
          {"variant", variant},
          {"config", model_config_to_json(model.config())},
          {"stats", model.stats().to_json()},
          {"params", params}};
}

struct LoadedModel {
  std::unique_ptr<ThermalModel> model;
  std::string variant;
};

inline LoadedModel model_from_checkpoint(const nlohmann::json& j) {
  if (j.value("format", "") != kCheckpointFormat) throw InputError("checkpoint: missing or wrong format tag");
  if (j.value("schema_version", 0) != kCheckpointVersion)
    throw InputError("checkpoint: unsupported schema_version " + j.value("schema_version", nlohmann::json()).dump());
  const ModelConfig cfg = model_config_from_json(j.at("config"));
  const std::string kind = j.at("kind").get<std::string>();
  LoadedModel out;
  if (kind == "pi-modnn") out.model = std::make_unique<PiModNn>(cfg, 0);
  else if (kind == "lstm") out.model = std::make_unique<RecurrentBaseline>(cfg, 0);
  else throw InputError("checkpoint: unknown model kind '" + kind + "'");
  out.model->set_stats(NormStats::from_json(j.at("stats")));
  for (auto& [name, ps] : out.model->named_param_sets()) {
    ParamSet loaded = ParamSet::from_json(j.at("params").at(name));
    if (loaded.names() != ps->names()) throw InputError("checkpoint: parameter layout mismatch in '" + name + "'");
    ps->copy_values_from(loaded);
    for (const auto& p : ps->names()) ps->set_nonneg(p, loaded.is_nonneg(p));
  }
  out.variant = j.value("variant", "");
  return out;
}

inline void save_checkpoint(const std::string& path, ThermalModel& model, const std::string& variant) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write checkpoint '" + path + "'");
  os << checkpoint_json(model, variant).dump(1) << '\n';
}

inline LoadedModel load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_checkpoint(j);
}

}  // namespace pimodnn::models
