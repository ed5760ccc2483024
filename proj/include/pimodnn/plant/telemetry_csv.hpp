#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pimodnn/numerics/errors.hpp"
#include "pimodnn/plant/plant.hpp"
#include "pimodnn/plant/time.hpp"

namespace pimodnn::plant {

inline constexpr const char* kTelemetryHeader =
    "timestamp,t_zone_c,t_out_c,solar_wm2,occupancy,u_hvac_kw,q_sup_m3s,q_out_m3s,t_sup_c";

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw InputError("telemetry CSV line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  return v;
}

inline void write_telemetry_csv(std::ostream& os, const std::vector<TelemetryRecord>& records) {
  os << kTelemetryHeader << '\n';
  for (const auto& r : records) {
    os << format_iso8601(r.time) << ',' << format_double(r.t_zone) << ',' << format_double(r.t_out) << ','
       << format_double(r.solar) << ',' << format_double(r.occupancy) << ',' << format_double(r.u_hvac) << ','
       << format_double(r.q_sup) << ',' << format_double(r.q_out) << ',' << format_double(r.t_sup) << '\n';
  }
}

inline void write_telemetry_csv(const std::string& path, const std::vector<TelemetryRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write telemetry CSV '" + path + "'");
  write_telemetry_csv(os, records);
}

inline std::vector<TelemetryRecord> read_telemetry_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("telemetry CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != kTelemetryHeader) throw InputError("telemetry CSV: unexpected header '" + line + "'");
  std::vector<TelemetryRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      auto pos = rest.find(',');
      f.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (f.size() != 9)
      throw InputError("telemetry CSV line " + std::to_string(lineno) + ": expected 9 fields, got " +
                       std::to_string(f.size()));
    TelemetryRecord r;
    r.time = parse_iso8601(f[0]);
    r.t_zone = parse_double(f[1], lineno);
    r.t_out = parse_double(f[2], lineno);
    r.solar = parse_double(f[3], lineno);
    r.occupancy = parse_double(f[4], lineno);
    r.u_hvac = parse_double(f[5], lineno);
    r.q_sup = parse_double(f[6], lineno);
    r.q_out = parse_double(f[7], lineno);
    r.t_sup = parse_double(f[8], lineno);
    out.push_back(r);
  }
  return out;
}

inline std::vector<TelemetryRecord> read_telemetry_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open telemetry CSV '" + path + "'");
  return read_telemetry_csv(is);
}

}  // namespace pimodnn::plant
