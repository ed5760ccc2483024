#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pimodnn/numerics/param_set.hpp"
#include "pimodnn/numerics/tape.hpp"

namespace pimodnn::numerics {

using Rng = std::mt19937_64;

/// Uniform(-limit, limit) fill. The draw order is row-major so a seed fixes every entry.
inline Tensor2 uniform_tensor(Eigen::Index rows, Eigen::Index cols, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor2 t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
  return t;
}

struct DenseInit {
  double weight_gain = 1.0;
  double bias_gain = 1.0;
  bool nonneg_weights = false;
};

/// Registers `<prefix>.W` (in x out) and `<prefix>.b` (1 x out) with fan-in scaled uniform init.
inline void add_dense(ParamSet& ps, const std::string& prefix, Eigen::Index in, Eigen::Index out, Rng& rng,
                      const DenseInit& init = {}) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(in));
  Tensor2 w = uniform_tensor(in, out, limit * init.weight_gain, rng);
  Tensor2 b = uniform_tensor(1, out, limit * init.bias_gain, rng);
  if (init.nonneg_weights) w = w.cwiseAbs();
  ps.add(prefix + ".W", std::move(w), init.nonneg_weights);
  ps.add(prefix + ".b", std::move(b));
}

struct DenseVars {
  Var w;
  Var b;
};

inline DenseVars bind_dense(Tape& t, ParamSet& ps, const std::string& prefix, bool track = true) {
  return {t.param(ps, prefix + ".W", track), t.param(ps, prefix + ".b", track)};
}

inline Var dense(const DenseVars& d, Var x) { return affine(x, d.w, d.b); }

inline Var dense(Tape& t, ParamSet& ps, const std::string& prefix, Var x, bool track = true) {
  return dense(bind_dense(t, ps, prefix, track), x);
}

/// Fully connected stack: hidden layers use `hidden_act`, the last layer is linear.
struct MlpSpec {
  std::string prefix;
  std::vector<Eigen::Index> widths;  // input, hidden..., output
  ActivationKind hidden_act = ActivationKind::Relu;
};

inline void add_mlp(ParamSet& ps, const MlpSpec& spec, Rng& rng, const DenseInit& init = {},
                    double last_layer_gain = 1.0) {
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    DenseInit li = init;
    if (l + 2 == spec.widths.size()) li.weight_gain *= last_layer_gain;
    add_dense(ps, spec.prefix + ".l" + std::to_string(l), spec.widths[l], spec.widths[l + 1], rng, li);
  }
}

struct MlpVars {
  std::vector<DenseVars> layers;
  ActivationKind hidden_act = ActivationKind::Relu;
};

inline MlpVars bind_mlp(Tape& t, ParamSet& ps, const MlpSpec& spec, bool track = true) {
  MlpVars m;
  m.hidden_act = spec.hidden_act;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l)
    m.layers.push_back(bind_dense(t, ps, spec.prefix + ".l" + std::to_string(l), track));
  return m;
}

inline Var mlp(const MlpVars& m, Var x) {
  Var h = x;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    h = dense(m.layers[l], h);
    if (l + 1 < m.layers.size()) h = activation(h, m.hidden_act);
  }
  return h;
}

inline Var mlp(Tape& t, ParamSet& ps, const MlpSpec& spec, Var x, bool track = true) {
  return mlp(bind_mlp(t, ps, spec, track), x);
}

/// GRU parameters: `<prefix>.Wi` (in x 3H), `.Wh` (H x 3H), `.bi`, `.bh` (1 x 3H).
/// Gate blocks are ordered [reset | update | candidate].
inline void add_gru(ParamSet& ps, const std::string& prefix, Eigen::Index in, Eigen::Index hidden, Rng& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(hidden));
  ps.add(prefix + ".Wi", uniform_tensor(in, 3 * hidden, limit, rng));
  ps.add(prefix + ".Wh", uniform_tensor(hidden, 3 * hidden, limit, rng));
  ps.add(prefix + ".bi", uniform_tensor(1, 3 * hidden, limit, rng));
  ps.add(prefix + ".bh", uniform_tensor(1, 3 * hidden, limit, rng));
}

struct GruVars {
  Var wi, wh, bi, bh;
};

inline GruVars bind_gru(Tape& t, ParamSet& ps, const std::string& prefix, bool track = true) {
  return {t.param(ps, prefix + ".Wi", track), t.param(ps, prefix + ".Wh", track), t.param(ps, prefix + ".bi", track),
          t.param(ps, prefix + ".bh", track)};
}

/// h' = (1 - z) * n + z * h with
///   r = sigmoid(x Wi_r + bi_r + h Wh_r + bh_r)
///   z = sigmoid(x Wi_z + bi_z + h Wh_z + bh_z)
///   n = tanh(x Wi_n + bi_n + r * (h Wh_n + bh_n))
inline Var gru_cell(const GruVars& g, Var x, Var h) {
  Tape& t = *x.tape;
  const Tensor2& wi = t.value(g.wi);
  const Eigen::Index hidden = wi.cols() / 3;
  if (t.value(x).cols() != wi.rows())
    throw DimensionError("gru_cell: input width " + std::to_string(t.value(x).cols()) + ", expected " +
                         std::to_string(wi.rows()));
  if (t.value(h).cols() != hidden)
    throw DimensionError("gru_cell: hidden width " + std::to_string(t.value(h).cols()) + ", expected " +
                         std::to_string(hidden));
  Var gi = affine(x, g.wi, g.bi);
  Var gh = affine(h, g.wh, g.bh);
  Var r = sigmoid(add(slice_cols(gi, 0, hidden), slice_cols(gh, 0, hidden)));
  Var z = sigmoid(add(slice_cols(gi, hidden, hidden), slice_cols(gh, hidden, hidden)));
  Var n = tanh(add(slice_cols(gi, 2 * hidden, hidden), mul(r, slice_cols(gh, 2 * hidden, hidden))));
  return add(mul(one_minus(z), n), mul(z, h));
}

inline Var gru_cell(Tape& t, ParamSet& ps, const std::string& prefix, Var x, Var h, bool track = true) {
  return gru_cell(bind_gru(t, ps, prefix, track), x, h);
}

/// LSTM parameters: `<prefix>.Wi` (in x 4H), `.Wh` (H x 4H), `.b` (1 x 4H); blocks [input | forget | cell | output].
inline void add_lstm(ParamSet& ps, const std::string& prefix, Eigen::Index in, Eigen::Index hidden, Rng& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(hidden));
  ps.add(prefix + ".Wi", uniform_tensor(in, 4 * hidden, limit, rng));
  ps.add(prefix + ".Wh", uniform_tensor(hidden, 4 * hidden, limit, rng));
  Tensor2 b = uniform_tensor(1, 4 * hidden, limit, rng);
  b.middleCols(hidden, hidden).array() += 1.0;  // forget-gate bias
  ps.add(prefix + ".b", std::move(b));
}

struct LstmState {
  Var h;
  Var c;
};

struct LstmVars {
  Var wi, wh, b;
};

inline LstmVars bind_lstm(Tape& t, ParamSet& ps, const std::string& prefix, bool track = true) {
  return {t.param(ps, prefix + ".Wi", track), t.param(ps, prefix + ".Wh", track), t.param(ps, prefix + ".b", track)};
}

inline LstmState lstm_cell(const LstmVars& p, Var x, LstmState s) {
  Tape& t = *x.tape;
  const Tensor2& wi = t.value(p.wi);
  const Eigen::Index hidden = wi.cols() / 4;
  if (t.value(x).cols() != wi.rows())
    throw DimensionError("lstm_cell: input width " + std::to_string(t.value(x).cols()) + ", expected " +
                         std::to_string(wi.rows()));
  if (t.value(s.h).cols() != hidden)
    throw DimensionError("lstm_cell: hidden width " + std::to_string(t.value(s.h).cols()) + ", expected " +
                         std::to_string(hidden));
  Var gates = add(affine(x, p.wi, p.b), matmul(s.h, p.wh));
  Var i = sigmoid(slice_cols(gates, 0, hidden));
  Var f = sigmoid(slice_cols(gates, hidden, hidden));
  Var g = tanh(slice_cols(gates, 2 * hidden, hidden));
  Var o = sigmoid(slice_cols(gates, 3 * hidden, hidden));
  Var c = add(mul(f, s.c), mul(i, g));
  Var h = mul(o, tanh(c));
  return {h, c};
}

inline LstmState lstm_cell(Tape& t, ParamSet& ps, const std::string& prefix, Var x, LstmState s, bool track = true) {
  return lstm_cell(bind_lstm(t, ps, prefix, track), x, s);
}

}  // namespace pimodnn::numerics
