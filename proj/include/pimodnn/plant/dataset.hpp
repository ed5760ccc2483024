#pragma once

#include <cstdint>

#include "pimodnn/plant/excitation.hpp"
#include "pimodnn/plant/plant.hpp"
#include "pimodnn/plant/weather.hpp"

namespace pimodnn::plant {

struct DatasetSpec {
  PlantParams plant;
  WeatherParams weather;
  ExcitationParams excitation;
  int days = 62;
  std::uint64_t seed = 7;
  PlantState initial{22.0, 22.0};
};

/// Weather, excitation and sensor noise draw from independent streams derived from spec.seed.
inline SimulationResult generate_dataset(const DatasetSpec& spec) {
  const auto exo = generate_weather(spec.days, spec.seed, spec.weather);
  ExcitationController ctrl(spec.seed + 1, spec.excitation);
  return simulate(spec.plant, spec.initial, exo,
                  [&ctrl](const PlantState& s, const ExogenousSample& w) { return ctrl(s, w); }, spec.seed + 2);
}

}  // namespace pimodnn::plant
