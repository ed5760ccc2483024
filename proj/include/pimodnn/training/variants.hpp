#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>

#include "pimodnn/models/pi_modnn.hpp"
#include "pimodnn/models/recurrent_baseline.hpp"

namespace pimodnn::training {

inline constexpr std::array<const char*, 5> kVariantNames{"LSTM", "PI-ModNN|LC", "PI-ModNN|L", "PI-ModNN|C",
                                                          "PI-ModNN"};

inline std::string variant_list() {
  std::string s;
  for (const char* n : kVariantNames) s += (s.empty() ? "" : ", ") + std::string(n);
  return s;
}

/// Flag mapping for a named configuration; throws on unknown names.
inline models::ModelFlags variant_flags(const std::string& name) {
  if (name == "LSTM") return {false, false, false};
  if (name == "PI-ModNN|LC") return {true, false, false};
  if (name == "PI-ModNN|L") return {true, false, true};
  if (name == "PI-ModNN|C") return {true, true, false};
  if (name == "PI-ModNN") return {true, true, true};
  throw InputError("unknown variant '" + name + "' (valid: " + variant_list() + ")");
}

inline std::unique_ptr<models::ThermalModel> build_variant(const std::string& name, std::uint64_t seed,
                                                           models::ModelConfig base = {}) {
  base.flags = variant_flags(name);
  if (!base.flags.physics_structure) return std::make_unique<models::RecurrentBaseline>(base, seed);
  return std::make_unique<models::PiModNn>(base, seed);
}

}  // namespace pimodnn::training
