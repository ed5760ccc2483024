#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pimodnn/numerics/errors.hpp"
#include "pimodnn/plant/plant.hpp"
#include "pimodnn/plant/time.hpp"

namespace pimodnn::plant {

struct WeatherParams {
  Timestamp start = make_timestamp(2024, 7, 1);
  double step_s = 900.0;
  double annual_mean_c = 9.0;
  double annual_amplitude_c = 13.0;
  int warmest_day_of_year = 200;
  double diurnal_amplitude_c = 5.0;
  double noise_sigma_c = 1.5;   // stationary std of the AR(1) weather anomaly
  double noise_memory = 0.995;  // AR(1) coefficient per step
  double solar_peak_wm2 = 800.0;
  int occupancy_max = 10;
  double occupied_from_h = 8.0;
  double occupied_to_h = 18.0;
};

/// Synthetic weather and occupancy at `step_s` resolution.
///
/// Outdoor temperature is an annual cosine plus a diurnal sine peaking at
/// 15:00 plus an AR(1) anomaly. Solar is a half-sine between 06:00 and 18:00
/// scaled by a daily cloud factor. Occupancy follows a weekday step schedule
/// with a per-day headcount.
inline std::vector<ExogenousSample> generate_weather(int days, std::uint64_t seed, const WeatherParams& wp = {}) {
  if (days < 1) throw InputError("generate_weather: days must be >= 1");
  const int per_day = static_cast<int>(std::lround(static_cast<double>(kSecondsPerDay) / wp.step_s));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double innovation = wp.noise_sigma_c * std::sqrt(1.0 - wp.noise_memory * wp.noise_memory);
  double anomaly = wp.noise_sigma_c * gauss(rng);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  std::vector<ExogenousSample> out;
  out.reserve(static_cast<std::size_t>(days) * per_day);
  for (int d = 0; d < days; ++d) {
    const double cloud = 0.35 + 0.65 * unit(rng);
    const int headcount = static_cast<int>(std::lround(wp.occupancy_max * (0.5 + 0.5 * unit(rng))));
    for (int k = 0; k < per_day; ++k) {
      ExogenousSample s;
      s.time = wp.start + static_cast<Timestamp>(std::llround((static_cast<double>(d) * per_day + k) * wp.step_s));
      const double hour = hour_of_day(s.time);
      const double doy = day_of_year(s.time) + hour / 24.0;
      anomaly = wp.noise_memory * anomaly + innovation * gauss(rng);
      s.t_out = wp.annual_mean_c + wp.annual_amplitude_c * std::cos(two_pi * (doy - wp.warmest_day_of_year) / 365.0) +
                wp.diurnal_amplitude_c * std::sin(two_pi * (hour - 9.0) / 24.0) + anomaly;

      s.solar = (hour > 6.0 && hour < 18.0) ? wp.solar_peak_wm2 * cloud * std::sin(std::numbers::pi * (hour - 6.0) / 12.0)
                                             : 0.0;
      s.solar = std::max(0.0, s.solar);

      const int wd = weekday(s.time);
      const bool workday = wd >= 1 && wd <= 5;
      if (workday && hour >= wp.occupied_from_h && hour < wp.occupied_to_h) {
        const double lunch = (hour >= 12.0 && hour < 13.0) ? 0.6 : 1.0;
        const double jitter = 0.15 * gauss(rng);
        const double occ = std::round(headcount * lunch * (1.0 + jitter));
        s.occupancy = std::clamp(occ, 0.0, static_cast<double>(wp.occupancy_max));
      } else {
        s.occupancy = 0.0;
      }
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace pimodnn::plant
