#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pimodnn/numerics/param_set.hpp"
#include "pimodnn/numerics/tape.hpp"

namespace pimodnn::numerics {

struct GradCheckOptions {
  double step = 1e-5;
  /// Denominator floor for the relative discrepancy, so gradients that are
  /// zero up to roundoff do not blow the ratio up.
  double abs_floor = 1e-6;
};

struct GradCheckReport {
  std::map<std::string, double> max_rel_discrepancy;

  [[nodiscard]] double worst() const {
    double w = 0.0;
    for (const auto& [_, d] : max_rel_discrepancy) w = std::max(w, d);
    return w;
  }
};

inline double relative_discrepancy(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares tape gradients of `loss_fn` against central finite differences for
/// every entry of every parameter in `sets`. `loss_fn` must bind parameters
/// through Tape::param and be deterministic.
inline GradCheckReport grad_check(const std::function<Var(Tape&)>& loss_fn, const std::vector<ParamSet*>& sets,
                                  const GradCheckOptions& opt = {}) {
  for (ParamSet* ps : sets) ps->zero_grad();
  {
    Tape tape;
    tape.backward(loss_fn(tape));
  }
  auto eval = [&]() {
    Tape tape;
    return tape.value(loss_fn(tape))(0, 0);
  };

  GradCheckReport report;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    ParamSet& ps = *sets[s];
    for (const auto& name : ps.names()) {
      Param& p = ps.at(name);
      double worst = 0.0;
      for (Eigen::Index i = 0; i < p.value.size(); ++i) {
        const double orig = p.value.data()[i];
        p.value.data()[i] = orig + opt.step;
        const double up = eval();
        p.value.data()[i] = orig - opt.step;
        const double down = eval();
        p.value.data()[i] = orig;
        const double numeric = (up - down) / (2.0 * opt.step);
        worst = std::max(worst, relative_discrepancy(p.grad.data()[i], numeric, opt.abs_floor));
      }
      const std::string key = sets.size() > 1 ? std::to_string(s) + ":" + name : name;
      report.max_rel_discrepancy[key] = worst;
    }
  }
  for (ParamSet* ps : sets) ps->zero_grad();
  return report;
}

inline GradCheckReport grad_check(const std::function<Var(Tape&)>& loss_fn, ParamSet& params,
                                  const GradCheckOptions& opt = {}) {
  return grad_check(loss_fn, std::vector<ParamSet*>{&params}, opt);
}

}  // namespace pimodnn::numerics
