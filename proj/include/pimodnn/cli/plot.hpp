#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pimodnn/evaluation/ablation.hpp"
#include "pimodnn/plant/telemetry_csv.hpp"

namespace pimodnn::cli {

inline const std::vector<std::string> kPlotKinds{"mae-vs-days", "trv-vs-days", "ri", "loss-decay", "day-trace"};

struct Series {
  std::string name;
  std::vector<double> x, y;
};

struct BoxGroup {
  std::string label;
  std::vector<double> values;
};

struct PlotOutput {
  std::string svg;
  std::string csv;
};

namespace svg {

inline constexpr double kW = 720, kH = 420, kL = 70, kR = 20, kT = 40, kB = 70;
inline const std::vector<std::string> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

struct Axis {
  double lo = 0, hi = 1;
  void fit(double a, double b) {
    lo = a;
    hi = b;
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

inline std::string header(const std::string& title, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW
     << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n"
     << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n"
     << "<text transform=\"translate(16," << kH / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << escape(ylabel)
     << "</text>\n";
  return os.str();
}

inline std::string y_axis(const Axis& ay) {
  std::ostringstream os;
  const double y0 = kH - kB, y1 = kT;
  os << "<line x1=\"" << kL << "\" y1=\"" << y0 << "\" x2=\"" << kL << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = ay.lo + (ay.hi - ay.lo) * i / 5.0;
    const double py = y0 - (y0 - y1) * i / 5.0;
    os << "<line x1=\"" << kL - 4 << "\" y1=\"" << py << "\" x2=\"" << kW - kR << "\" y2=\"" << py
       << "\" stroke=\"#ddd\"/>\n<text x=\"" << kL - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << num(v)
       << "</text>\n";
  }
  return os.str();
}

}  // namespace svg

inline std::string line_plot_svg(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                                 const std::string& ylabel) {
  using namespace svg;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  Axis ax, ay;
  ax.fit(xmin, xmax);
  ay.fit(ymin, ymax);
  auto px = [&](double x) { return kL + (x - ax.lo) / (ax.hi - ax.lo) * (kW - kL - kR); };
  auto py = [&](double y) { return (kH - kB) - (y - ay.lo) / (ay.hi - ay.lo) * (kH - kB - kT); };
  std::ostringstream os;
  os << header(title, xlabel, ylabel) << y_axis(ay);
  os << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\"" << kH - kB
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = ax.lo + (ax.hi - ax.lo) * i / 5.0;
    os << "<text x=\"" << px(v) << "\" y=\"" << kH - kB + 16 << "\" text-anchor=\"middle\">" << num(v) << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const auto& col = kColors[k % kColors.size()];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i])) os << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
    os << "\"/>\n";
    const double ly = kT + 14 * static_cast<double>(k);
    os << "<rect x=\"" << kW - kR - 150 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\"" << col
       << "\"/><text x=\"" << kW - kR - 135 << "\" y=\"" << ly + 1 << "\">" << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline std::string box_plot_svg(const std::vector<BoxGroup>& groups, const std::string& title, const std::string& ylabel) {
  using namespace svg;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& g : groups)
    for (double v : g.values)
      if (std::isfinite(v)) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
  if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
  Axis ay;
  ay.fit(ymin, ymax);
  auto py = [&](double y) { return (kH - kB) - (y - ay.lo) / (ay.hi - ay.lo) * (kH - kB - kT); };
  std::ostringstream os;
  os << header(title, "", ylabel) << y_axis(ay);
  const double slot = (kW - kL - kR) / std::max<std::size_t>(1, groups.size());
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const double cx = kL + slot * (static_cast<double>(k) + 0.5);
    const double bw = std::min(40.0, slot * 0.6);
    std::vector<double> v;
    for (double x : groups[k].values)
      if (std::isfinite(x)) v.push_back(x);
    os << "<text transform=\"translate(" << cx << ',' << kH - kB + 14 << ") rotate(30)\" font-size=\"10\">"
       << escape(groups[k].label) << "</text>\n";
    if (v.empty()) continue;
    const auto d = evaluation::distribution_of(v);
    const auto& col = kColors[k % kColors.size()];
    os << "<line x1=\"" << cx << "\" y1=\"" << py(d.min) << "\" x2=\"" << cx << "\" y2=\"" << py(d.max)
       << "\" stroke=\"black\"/>\n"
       << "<rect x=\"" << cx - bw / 2 << "\" y=\"" << py(d.q3) << "\" width=\"" << bw << "\" height=\""
       << std::max(1.0, py(d.q1) - py(d.q3)) << "\" fill=\"" << col << "\" fill-opacity=\"0.4\" stroke=\"" << col
       << "\"/>\n"
       << "<line x1=\"" << cx - bw / 2 << "\" y1=\"" << py(d.median) << "\" x2=\"" << cx + bw / 2 << "\" y2=\""
       << py(d.median) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline std::string box_csv(const std::vector<BoxGroup>& groups) {
  std::ostringstream os;
  os << "group,value\n";
  for (const auto& g : groups)
    for (double v : g.values) os << g.label << ',' << plant::format_double(v) << '\n';
  return os.str();
}

inline std::string series_csv(const std::vector<Series>& series) {
  std::ostringstream os;
  os << "series,x,y\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << s.name << ',' << plant::format_double(s.x[i]) << ',' << plant::format_double(s.y[i]) << '\n';
  return os.str();
}

inline PlotOutput plot_report(const nlohmann::json& report, const std::string& kind) {
  if (std::find(kPlotKinds.begin(), kPlotKinds.end(), kind) == kPlotKinds.end()) {
    std::string valid;
    for (const auto& k : kPlotKinds) valid += (valid.empty() ? "" : ", ") + k;
    throw InputError("unknown plot kind '" + kind + "'; valid kinds: " + valid);
  }
  auto need = [&](const char* key) {
    if (!report.contains(key)) throw InputError("plot " + kind + ": report has no '" + key + "' field");
    return report.at(key);
  };
  if (kind == "mae-vs-days" || kind == "trv-vs-days") {
    std::map<std::pair<int, std::string>, std::vector<double>> by;
    for (const auto& c : need("cells")) {
      if (!c.value("ok", false)) continue;
      const double v = kind == "mae-vs-days" ? c.at("mae_c").get<double>()
                                             : c.at("trv_plus").get<double>() + c.at("trv_minus").get<double>();
      by[{c.at("days").get<int>(), c.at("variant").get<std::string>()}].push_back(v);
    }
    std::vector<BoxGroup> g;
    for (auto& [k, v] : by) g.push_back({k.second + " " + std::to_string(k.first) + "d", v});
    const bool mae = kind == "mae-vs-days";
    return {box_plot_svg(g, mae ? "Rolling MAE by variant and training days" : "TRV by variant and training days",
                         mae ? "MAE (degC)" : "TRV+ + TRV- (degC*step)"),
            box_csv(g)};
  }
  if (kind == "ri") {
    std::vector<BoxGroup> g;
    for (const auto& e : need("rule_importance")) {
      const int d = e.at("days").get<int>();
      g.push_back({e.at("prior").get<std::string>() + "/" + e.at("metric").get<std::string>() + "/" +
                       (d == 0 ? std::string("all") : std::to_string(d) + "d"),
                   e.at("ri").at("values").get<std::vector<double>>()});
    }
    return {box_plot_svg(g, "Rule importance by prior", "RI"), box_csv(g)};
  }
  if (kind == "loss-decay") {
    Series tr{"train_total", {}, {}}, va{"val_total", {}, {}};
    for (const auto& e : need("epochs")) {
      tr.x.push_back(e.at("epoch").get<double>());
      tr.y.push_back(e.at("train_total").get<double>());
      va.x.push_back(e.at("epoch").get<double>());
      va.y.push_back(e.at("val_total").get<double>());
    }
    std::vector<Series> s{tr, va};
    return {line_plot_svg(s, "Loss decay", "epoch", "loss"), series_csv(s)};
  }
  // day-trace
  const auto& trace = need("trace");
  Series tz{"t_zone", {}, {}}, lo{"comfort_lo", {}, {}}, hi{"comfort_hi", {}, {}}, ts{"t_sup", {}, {}};
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& p = trace[i];
    const double h = 0.25 * static_cast<double>(i + 1);
    tz.x.push_back(h), tz.y.push_back(p.at("t_zone").get<double>());
    lo.x.push_back(h), lo.y.push_back(p.at("comfort_lo").get<double>());
    hi.x.push_back(h), hi.y.push_back(p.at("comfort_hi").get<double>());
    ts.x.push_back(h), ts.y.push_back(p.at("t_sup").get<double>());
  }
  std::vector<Series> s{tz, lo, hi, ts};
  return {line_plot_svg(s, "Zone temperature, comfort band and supply temperature", "hours", "degC"), series_csv(s)};
}

}  // namespace pimodnn::cli
