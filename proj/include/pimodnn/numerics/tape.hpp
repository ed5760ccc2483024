#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pimodnn/numerics/errors.hpp"
#include "pimodnn/numerics/param_set.hpp"
#include "pimodnn/numerics/tensor.hpp"

namespace pimodnn::numerics {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
};

/// Reverse-mode gradient tape over dense Tensor2 operations.
///
/// Nodes are appended in evaluation order, so a reverse sweep visits every node
/// after all of its consumers. Parameter leaves flush their gradient into the
/// owning ParamSet at the end of each backward call; repeated calls accumulate.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, const Tensor2&)>;

  Tape() { nodes_.reserve(1024); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor2 value) { return push(std::move(value), false, nullptr); }
  Var constant(double v) { return constant(scalar_tensor(v)); }

  /// Leaf whose gradient can be read back with grad() after backward().
  Var variable(Tensor2 value) { return push(std::move(value), true, nullptr); }

  /// Leaf bound to a ParamSet entry. With track=false the current value is
  /// copied in as a constant and no gradient reaches the set.
  Var param(ParamSet& ps, const std::string& name, bool track = true) {
    Param& p = ps.at(name);
    if (!track) return constant(p.value);
    Param* target = &p;
    return push(p.value, true, [target](Tape&, const Tensor2& g) { target->grad += g; });
  }

  [[nodiscard]] const Tensor2& value(Var v) const { return nodes_.at(v.id).value; }
  [[nodiscard]] bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Gradient of the last backward() target with respect to v (zeros if unreached).
  [[nodiscard]] Tensor2 grad(Var v) const {
    const auto& n = nodes_.at(v.id);
    if (n.grad.size() == 0) return Tensor2::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

  void backward(Var loss) {
    if (loss.tape != this) throw ContractError("backward: variable belongs to another tape");
    const auto& out = nodes_.at(loss.id);
    if (out.value.rows() != 1 || out.value.cols() != 1)
      throw ContractError("backward: loss must be a 1x1 scalar, got " + shape_str(out.value));
    for (std::size_t i = 0; i <= loss.id; ++i) nodes_[i].grad.resize(0, 0);
    nodes_[loss.id].grad = Tensor2::Ones(1, 1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.size() == 0 || !n.backprop) continue;
      n.backprop(*this, n.grad);
    }
  }

  /// Record an operation result. `backprop` receives the node's output gradient
  /// and must route it to parents via accumulate().
  Var push(Tensor2 value, bool requires_grad, Backprop backprop) {
    nodes_.push_back(Node{std::move(value), Tensor2{}, requires_grad, std::move(backprop)});
    return Var{this, nodes_.size() - 1};
  }

  template <class Expr>
  void accumulate(std::size_t id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad = g;
    else n.grad += g;
  }

 private:
  struct Node {
    Tensor2 value;
    Tensor2 grad;
    bool requires_grad = false;
    Backprop backprop;
  };
  std::vector<Node> nodes_;
};

namespace detail {

inline Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw ContractError("operation on an unbound Var");
  return *a.tape;
}

inline Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw ContractError("operands recorded on different tapes");
  return tape_of(a);
}

template <class Fwd, class Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Tape& t = tape_of(a);
  const Tensor2& x = t.value(a);
  Tensor2 y = fwd(x);
  const bool rg = t.requires_grad(a);
  if (!rg) return t.push(std::move(y), false, nullptr);
  const std::size_t ia = a.id;
  const std::size_t iy = t.size();
  return t.push(std::move(y), true, [ia, iy, deriv](Tape& tp, const Tensor2& g) {
    tp.accumulate(ia, deriv(tp.value(Var{&tp, ia}), tp.value(Var{&tp, iy}), g));
  });
}

enum class Broadcast { Same, Row, Scalar };

inline Broadcast broadcast_kind(const Tensor2& a, const Tensor2& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::Same;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::Scalar;
  throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(b) + " onto " + shape_str(a));
}

inline Tensor2 reduce_to(const Tensor2& g, Broadcast kind) {
  switch (kind) {
    case Broadcast::Same: return g;
    case Broadcast::Row: return g.colwise().sum();
    case Broadcast::Scalar: return scalar_tensor(g.sum());
  }
  return g;
}

inline Tensor2 broadcast_to(const Tensor2& b, const Tensor2& a, Broadcast kind) {
  switch (kind) {
    case Broadcast::Same: return b;
    case Broadcast::Row: return b.replicate(a.rows(), 1);
    case Broadcast::Scalar: return Tensor2::Constant(a.rows(), a.cols(), b(0, 0));
  }
  return b;
}

}  // namespace detail

/// a + b, where b may be same-shape, a 1xN row broadcast over rows, or a 1x1 scalar.
inline Var add(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const auto kind = detail::broadcast_kind(t.value(a), t.value(b), "add");
  Tensor2 y = t.value(a) + detail::broadcast_to(t.value(b), t.value(a), kind);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  if (!rg) return t.push(std::move(y), false, nullptr);
  const std::size_t ia = a.id, ib = b.id;
  return t.push(std::move(y), true, [ia, ib, kind](Tape& tp, const Tensor2& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, detail::reduce_to(g, kind));
  });
}

/// a - b with the same broadcasting rules as add().
inline Var sub(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const auto kind = detail::broadcast_kind(t.value(a), t.value(b), "sub");
  Tensor2 y = t.value(a) - detail::broadcast_to(t.value(b), t.value(a), kind);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  if (!rg) return t.push(std::move(y), false, nullptr);
  const std::size_t ia = a.id, ib = b.id;
  return t.push(std::move(y), true, [ia, ib, kind](Tape& tp, const Tensor2& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, -detail::reduce_to(g, kind));
  });
}

/// Element-wise product; b may broadcast as in add().
inline Var mul(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const auto kind = detail::broadcast_kind(t.value(a), t.value(b), "mul");
  Tensor2 bb = detail::broadcast_to(t.value(b), t.value(a), kind);
  Tensor2 y = t.value(a).cwiseProduct(bb);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  if (!rg) return t.push(std::move(y), false, nullptr);
  const std::size_t ia = a.id, ib = b.id;
  return t.push(std::move(y), true, [ia, ib, kind](Tape& tp, const Tensor2& g) {
    const Tensor2& av = tp.value(Var{&tp, ia});
    const Tensor2& bv = tp.value(Var{&tp, ib});
    if (tp.requires_grad(Var{&tp, ia})) tp.accumulate(ia, g.cwiseProduct(detail::broadcast_to(bv, av, kind)));
    if (tp.requires_grad(Var{&tp, ib})) tp.accumulate(ib, detail::reduce_to(g.cwiseProduct(av), kind));
  });
}

inline Var scale(Var a, double s) {
  return detail::unary(
      a, [s](const Tensor2& x) -> Tensor2 { return s * x; },
      [s](const Tensor2&, const Tensor2&, const Tensor2& g) -> Tensor2 { return s * g; });
}

inline Var add_scalar(Var a, double s) {
  return detail::unary(
      a, [s](const Tensor2& x) -> Tensor2 { return x.array() + s; },
      [](const Tensor2&, const Tensor2&, const Tensor2& g) -> Tensor2 { return g; });
}

inline Var neg(Var a) { return scale(a, -1.0); }

/// 1 - a
inline Var one_minus(Var a) {
  return detail::unary(
      a, [](const Tensor2& x) -> Tensor2 { return 1.0 - x.array(); },
      [](const Tensor2&, const Tensor2&, const Tensor2& g) -> Tensor2 { return -g; });
}

inline Var matmul(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const Tensor2& av = t.value(a);
  const Tensor2& bv = t.value(b);
  if (av.cols() != bv.rows())
    throw DimensionError("matmul: " + shape_str(av) + " * " + shape_str(bv));
  Tensor2 y = av * bv;
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  if (!rg) return t.push(std::move(y), false, nullptr);
  const std::size_t ia = a.id, ib = b.id;
  return t.push(std::move(y), true, [ia, ib](Tape& tp, const Tensor2& g) {
    const Var va{&tp, ia}, vb{&tp, ib};
    if (tp.requires_grad(va)) tp.accumulate(ia, g * tp.value(vb).transpose());
    if (tp.requires_grad(vb)) tp.accumulate(ib, tp.value(va).transpose() * g);
  });
}

/// x W + b with b a 1xN row broadcast over the batch.
inline Var affine(Var x, Var w, Var b) {
  Tape& t = detail::tape_of(x, w);
  detail::tape_of(w, b);
  const Tensor2& xv = t.value(x);
  const Tensor2& wv = t.value(w);
  const Tensor2& bv = t.value(b);
  if (xv.cols() != wv.rows())
    throw DimensionError("affine: input " + shape_str(xv) + " does not conform with weights " + shape_str(wv));
  if (bv.rows() != 1 || bv.cols() != wv.cols())
    throw DimensionError("affine: bias " + shape_str(bv) + " does not conform with weights " + shape_str(wv));
  Tensor2 y = xv * wv;
  y.rowwise() += bv.row(0);
  const bool rg = t.requires_grad(x) || t.requires_grad(w) || t.requires_grad(b);
  if (!rg) return t.push(std::move(y), false, nullptr);
  const std::size_t ix = x.id, iw = w.id, ib = b.id;
  return t.push(std::move(y), true, [ix, iw, ib](Tape& tp, const Tensor2& g) {
    const Var vx{&tp, ix}, vw{&tp, iw}, vb{&tp, ib};
    if (tp.requires_grad(vx)) tp.accumulate(ix, g * tp.value(vw).transpose());
    if (tp.requires_grad(vw)) tp.accumulate(iw, tp.value(vx).transpose() * g);
    if (tp.requires_grad(vb)) tp.accumulate(ib, g.colwise().sum());
  });
}

inline Var sigmoid(Var a) {
  return detail::unary(
      a, [](const Tensor2& x) -> Tensor2 { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); },
      [](const Tensor2&, const Tensor2& y, const Tensor2& g) -> Tensor2 {
        return (g.array() * y.array() * (1.0 - y.array())).matrix();
      });
}

inline Var tanh(Var a) {
  return detail::unary(
      a, [](const Tensor2& x) -> Tensor2 { return x.array().tanh().matrix(); },
      [](const Tensor2&, const Tensor2& y, const Tensor2& g) -> Tensor2 {
        return (g.array() * (1.0 - y.array().square())).matrix();
      });
}

/// max(x, 0); the subgradient at exactly 0 is 0.
inline Var relu(Var a) {
  return detail::unary(
      a, [](const Tensor2& x) -> Tensor2 { return x.cwiseMax(0.0); },
      [](const Tensor2& x, const Tensor2&, const Tensor2& g) -> Tensor2 {
        return (x.array() > 0.0).select(g, 0.0);
      });
}

inline Var exp(Var a) {
  return detail::unary(
      a, [](const Tensor2& x) -> Tensor2 { return x.array().exp().matrix(); },
      [](const Tensor2&, const Tensor2& y, const Tensor2& g) -> Tensor2 { return g.cwiseProduct(y); });
}

inline Var log(Var a) {
  return detail::unary(
      a, [](const Tensor2& x) -> Tensor2 { return x.array().log().matrix(); },
      [](const Tensor2& x, const Tensor2&, const Tensor2& g) -> Tensor2 { return g.cwiseQuotient(x); });
}

/// log(1 + exp(x)), evaluated stably.
inline Var softplus(Var a) {
  return detail::unary(
      a,
      [](const Tensor2& x) -> Tensor2 {
        return (x.array().max(0.0) + (-x.array().abs()).exp().log1p()).matrix();
      },
      [](const Tensor2& x, const Tensor2&, const Tensor2& g) -> Tensor2 {
        return (g.array() / (1.0 + (-x.array()).exp())).matrix();
      });
}

inline Var square(Var a) {
  return detail::unary(
      a, [](const Tensor2& x) -> Tensor2 { return x.array().square().matrix(); },
      [](const Tensor2& x, const Tensor2&, const Tensor2& g) -> Tensor2 { return 2.0 * g.cwiseProduct(x); });
}

/// |x|; the subgradient at 0 is 0.
inline Var abs(Var a) {
  return detail::unary(
      a, [](const Tensor2& x) -> Tensor2 { return x.cwiseAbs(); },
      [](const Tensor2& x, const Tensor2&, const Tensor2& g) -> Tensor2 {
        return (g.array() * x.array().sign()).matrix();
      });
}

/// Element-wise clamp to [lo, hi]; gradient passes only strictly inside the interval.
inline Var clamp(Var a, double lo, double hi) {
  return detail::unary(
      a, [lo, hi](const Tensor2& x) -> Tensor2 { return x.cwiseMax(lo).cwiseMin(hi); },
      [lo, hi](const Tensor2& x, const Tensor2&, const Tensor2& g) -> Tensor2 {
        return (x.array() > lo && x.array() < hi).select(g, 0.0);
      });
}

/// Element-wise minimum of two same-shape tensors; ties route the gradient to `a`.
inline Var minimum(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const Tensor2& av = t.value(a);
  const Tensor2& bv = t.value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols())
    throw DimensionError("minimum: " + shape_str(av) + " vs " + shape_str(bv));
  Tensor2 y = av.cwiseMin(bv);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  if (!rg) return t.push(std::move(y), false, nullptr);
  const std::size_t ia = a.id, ib = b.id;
  return t.push(std::move(y), true, [ia, ib](Tape& tp, const Tensor2& g) {
    const Tensor2& x = tp.value(Var{&tp, ia});
    const Tensor2& z = tp.value(Var{&tp, ib});
    tp.accumulate(ia, (x.array() <= z.array()).select(g, 0.0));
    tp.accumulate(ib, (x.array() <= z.array()).select(0.0, g));
  });
}

/// Sum of all entries, as a 1x1 tensor.
inline Var sum(Var a) {
  return detail::unary(
      a, [](const Tensor2& x) -> Tensor2 { return scalar_tensor(x.sum()); },
      [](const Tensor2& x, const Tensor2&, const Tensor2& g) -> Tensor2 {
        return Tensor2::Constant(x.rows(), x.cols(), g(0, 0));
      });
}

inline Var mean(Var a) {
  return detail::unary(
      a, [](const Tensor2& x) -> Tensor2 { return scalar_tensor(x.mean()); },
      [](const Tensor2& x, const Tensor2&, const Tensor2& g) -> Tensor2 {
        return Tensor2::Constant(x.rows(), x.cols(), g(0, 0) / static_cast<double>(x.size()));
      });
}

/// Per-row sum, producing a rows x 1 column.
inline Var sum_cols(Var a) {
  return detail::unary(
      a, [](const Tensor2& x) -> Tensor2 { return x.rowwise().sum(); },
      [](const Tensor2& x, const Tensor2&, const Tensor2& g) -> Tensor2 { return g.replicate(1, x.cols()); });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no operands");
  Tape& t = detail::tape_of(parts.front());
  Eigen::Index rows = t.value(parts.front()).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (const Var& p : parts) {
    detail::tape_of(parts.front(), p);
    if (t.value(p).rows() != rows)
      throw DimensionError("concat_cols: row mismatch " + shape_str(t.value(p)) + " vs " + std::to_string(rows) + " rows");
    cols += t.value(p).cols();
    rg = rg || t.requires_grad(p);
  }
  Tensor2 y(rows, cols);
  std::vector<std::pair<std::size_t, Eigen::Index>> spans;
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    const auto& v = t.value(p);
    y.middleCols(c, v.cols()) = v;
    spans.emplace_back(p.id, v.cols());
    c += v.cols();
  }
  if (!rg) return t.push(std::move(y), false, nullptr);
  return t.push(std::move(y), true, [spans](Tape& tp, const Tensor2& g) {
    Eigen::Index off = 0;
    for (const auto& [id, width] : spans) {
      tp.accumulate(id, g.middleCols(off, width));
      off += width;
    }
  });
}

inline Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  Tape& t = detail::tape_of(a);
  const Tensor2& x = t.value(a);
  if (start < 0 || count < 0 || start + count > x.cols())
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of range for " + shape_str(x));
  Tensor2 y = x.middleCols(start, count);
  if (!t.requires_grad(a)) return t.push(std::move(y), false, nullptr);
  const std::size_t ia = a.id;
  const Eigen::Index rows = x.rows(), cols = x.cols();
  return t.push(std::move(y), true, [ia, start, count, rows, cols](Tape& tp, const Tensor2& g) {
    Tensor2 full = Tensor2::Zero(rows, cols);
    full.middleCols(start, count) = g;
    tp.accumulate(ia, full);
  });
}

enum class ActivationKind { Relu, Tanh, Sigmoid, Identity };

inline Var activation(Var x, ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Relu: return relu(x);
    case ActivationKind::Tanh: return tanh(x);
    case ActivationKind::Sigmoid: return sigmoid(x);
    case ActivationKind::Identity: return x;
  }
  return x;
}

}  // namespace pimodnn::numerics
