#pragma once

// Reverse-mode automatic differentiation over dense 2-D double arrays.
//
// A Tape records one forward computation (define-by-run); backward() walks
// the records once in reverse creation order, which is a valid topological
// order by construction. Gradients accumulate additively on fan-out and are
// zero-initialized when a node is created, so parameters that do not reach
// the loss report zero gradients. A tape and its arrays belong to one
// thread; independent tapes may run concurrently.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hgnn/array.hpp"
#include "hgnn/errors.hpp"

namespace hgnn::diff {

class Tape;

// Lightweight handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  int rows = 0;
  int cols = 0;
};

class Tape {
 public:
  using Pull = std::function<void(Tape&, int self_id)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf node (parameter or differentiable input).
  Var leaf(Array value) { return push(std::move(value), Pull{}); }

  // Constant input; recorded like a leaf, gradient is simply never read.
  Var constant(Array value) { return push(std::move(value), Pull{}); }

  // Record a custom operation. `pull` must add this node's adjoint
  // contributions into its operands' gradients.
  Var emit(Array value, Pull pull) { return push(std::move(value), std::move(pull)); }

  const Array& value(const Var& v) const { return nodes_[check(v)].value; }
  const Array& value_at(int id) const { return nodes_[id].value; }
  const Array& grad(const Var& v) const { return nodes_[check(v)].grad; }
  Array& grad_at(int id) { return nodes_[id].grad; }

  std::size_t node_count() const { return nodes_.size(); }

  void zero_grads() {
    for (auto& n : nodes_) n.grad.fill(0.0);
  }

  // Seeds dL/dloss = 1 and runs every record's pull exactly once, in
  // reverse order. `loss` must be 1x1.
  void backward(const Var& loss) {
    const int lid = check(loss);
    if (!nodes_[lid].value.is_scalar())
      throw ContractError("backward: loss must be 1x1, got " +
                          nodes_[lid].value.shape_str());
    nodes_[lid].grad(0, 0) += 1.0;
    for (int i = lid; i >= 0; --i) {
      if (nodes_[i].pull) nodes_[i].pull(*this, i);
    }
  }

 private:
  struct Node {
    Array value;
    Array grad;
    Pull pull;
  };

  Var push(Array value, Pull pull) {
    Node n;
    n.grad = Array(value.rows, value.cols, 0.0);
    n.value = std::move(value);
    n.pull = std::move(pull);
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size()) - 1;
    return Var{this, id, nodes_[id].value.rows, nodes_[id].value.cols};
  }

  int check(const Var& v) const {
    if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
      throw ContractError("Var does not belong to this tape");
    return v.id;
  }

  std::vector<Node> nodes_;
};

namespace detail {

inline Tape& same_tape(const Var& a, const Var& b) {
  if (a.tape == nullptr || a.tape != b.tape)
    throw ContractError("operands recorded on different tapes");
  return *a.tape;
}

inline std::string shapes(const Array& a, const Array& b) {
  return a.shape_str() + " and " + b.shape_str();
}

}  // namespace detail

// ---- structural ops ----

inline Var matmul(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Array& av = t.value(a);
  const Array& bv = t.value(b);
  if (av.cols != bv.rows)
    throw ShapeError("matmul: inner dimensions disagree, " + detail::shapes(av, bv));
  Array out(av.rows, bv.cols, 0.0);
  mm_nn_acc(av, bv, out);
  const int aid = a.id, bid = b.id;
  return t.emit(std::move(out), [aid, bid](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    mm_nt_acc(g, t.value_at(bid), t.grad_at(aid));  // dL/da = g * b^T
    mm_tn_acc(t.value_at(aid), g, t.grad_at(bid));  // dL/db = a^T * g
  });
}

// a * b^T; avoids materializing transposes on the hot path.
inline Var matmul_nt(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Array& av = t.value(a);
  const Array& bv = t.value(b);
  if (av.cols != bv.cols)
    throw ShapeError("matmul_nt: inner dimensions disagree, " + detail::shapes(av, bv));
  Array out(av.rows, bv.rows, 0.0);
  mm_nt_acc(av, bv, out);
  const int aid = a.id, bid = b.id;
  return t.emit(std::move(out), [aid, bid](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    mm_nn_acc(g, t.value_at(bid), t.grad_at(aid));  // dL/da = g * b
    mm_tn_acc(g, t.value_at(aid), t.grad_at(bid));  // dL/db = g^T * a
  });
}

inline Var transpose(const Var& a) {
  Tape& t = *a.tape;
  const Array& av = t.value(a);
  Array out(av.cols, av.rows);
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < av.cols; ++j) out(j, i) = av(i, j);
  const int aid = a.id;
  return t.emit(std::move(out), [aid](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    Array& ga = t.grad_at(aid);
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) ga(j, i) += g(i, j);
  });
}

inline Var add(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Array& av = t.value(a);
  const Array& bv = t.value(b);
  if (!av.same_shape(bv))
    throw ShapeError("add: shapes differ, " + detail::shapes(av, bv));
  Array out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += bv.v[i];
  const int aid = a.id, bid = b.id;
  return t.emit(std::move(out), [aid, bid](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    Array& ga = t.grad_at(aid);
    Array& gb = t.grad_at(bid);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.v[i] += g.v[i];
      gb.v[i] += g.v[i];
    }
  });
}

// Adds a 1 x c row vector to every row of a (the broadcast the model needs
// for bias terms).
inline Var add_rowvec(const Var& a, const Var& bias) {
  Tape& t = detail::same_tape(a, bias);
  const Array& av = t.value(a);
  const Array& bv = t.value(bias);
  if (bv.rows != 1 || bv.cols != av.cols)
    throw ShapeError("add_rowvec: bias must be 1x" + std::to_string(av.cols) +
                     ", got " + bv.shape_str());
  Array out = av;
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j) out(i, j) += bv(0, j);
  const int aid = a.id, bid = bias.id;
  return t.emit(std::move(out), [aid, bid](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    Array& ga = t.grad_at(aid);
    Array& gb = t.grad_at(bid);
    for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i];
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) gb(0, j) += g(i, j);
  });
}

inline Var hadamard(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Array& av = t.value(a);
  const Array& bv = t.value(b);
  if (!av.same_shape(bv))
    throw ShapeError("hadamard: shapes differ, " + detail::shapes(av, bv));
  Array out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= bv.v[i];
  const int aid = a.id, bid = b.id;
  return t.emit(std::move(out), [aid, bid](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    const Array& av = t.value_at(aid);
    const Array& bv = t.value_at(bid);
    Array& ga = t.grad_at(aid);
    Array& gb = t.grad_at(bid);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.v[i] += g.v[i] * bv.v[i];
      gb.v[i] += g.v[i] * av.v[i];
    }
  });
}

inline Var scale(const Var& a, double s) {
  Tape& t = *a.tape;
  Array out = t.value(a);
  for (double& x : out.v) x *= s;
  const int aid = a.id;
  return t.emit(std::move(out), [aid, s](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    Array& ga = t.grad_at(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += s * g.v[i];
  });
}

inline Var concat_rows(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Array& av = t.value(a);
  const Array& bv = t.value(b);
  if (av.cols != bv.cols)
    throw ShapeError("concat_rows: column counts differ, " + detail::shapes(av, bv));
  Array out(av.rows + bv.rows, av.cols);
  std::copy(av.v.begin(), av.v.end(), out.v.begin());
  std::copy(bv.v.begin(), bv.v.end(), out.v.begin() + av.size());
  const int aid = a.id, bid = b.id;
  const std::size_t asz = av.size();
  return t.emit(std::move(out), [aid, bid, asz](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    Array& ga = t.grad_at(aid);
    Array& gb = t.grad_at(bid);
    for (std::size_t i = 0; i < asz; ++i) ga.v[i] += g.v[i];
    for (std::size_t i = 0; i < gb.size(); ++i) gb.v[i] += g.v[asz + i];
  });
}

inline Var concat_cols(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Array& av = t.value(a);
  const Array& bv = t.value(b);
  if (av.rows != bv.rows)
    throw ShapeError("concat_cols: row counts differ, " + detail::shapes(av, bv));
  Array out(av.rows, av.cols + bv.cols);
  for (int i = 0; i < av.rows; ++i) {
    for (int j = 0; j < av.cols; ++j) out(i, j) = av(i, j);
    for (int j = 0; j < bv.cols; ++j) out(i, av.cols + j) = bv(i, j);
  }
  const int aid = a.id, bid = b.id;
  const int ac = av.cols, bc = bv.cols;
  return t.emit(std::move(out), [aid, bid, ac, bc](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    Array& ga = t.grad_at(aid);
    Array& gb = t.grad_at(bid);
    for (int i = 0; i < g.rows; ++i) {
      for (int j = 0; j < ac; ++j) ga(i, j) += g(i, j);
      for (int j = 0; j < bc; ++j) gb(i, j) += g(i, ac + j);
    }
  });
}

// Repeats a 1 x c row k times; adjoint sums the k rows back.
inline Var repeat_rows(const Var& a, int k) {
  Tape& t = *a.tape;
  const Array& av = t.value(a);
  if (av.rows != 1) throw ShapeError("repeat_rows: expected a row vector, got " + av.shape_str());
  if (k < 1) throw ContractError("repeat_rows: k must be >= 1");
  Array out(k, av.cols);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < av.cols; ++j) out(i, j) = av(0, j);
  const int aid = a.id;
  return t.emit(std::move(out), [aid](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    Array& ga = t.grad_at(aid);
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) ga(0, j) += g(i, j);
  });
}

inline Var reduce_sum(const Var& a) {
  Tape& t = *a.tape;
  const Array& av = t.value(a);
  double s = 0.0;
  for (double x : av.v) s += x;
  Array out(1, 1, s);
  const int aid = a.id;
  return t.emit(std::move(out), [aid](Tape& t, int self) {
    const double g = t.grad_at(self)(0, 0);
    Array& ga = t.grad_at(aid);
    for (double& x : ga.v) x += g;
  });
}

// Selected rows of a in the given order; adjoint scatters (and sums over
// duplicate ids) back into the source rows.
inline Var gather_rows(const Var& a, std::vector<int> ids) {
  Tape& t = *a.tape;
  const Array& av = t.value(a);
  for (int id : ids)
    if (id < 0 || id >= av.rows)
      throw IndexError("gather_rows: row " + std::to_string(id) +
                       " out of range [0, " + std::to_string(av.rows) + ")");
  Array out(static_cast<int>(ids.size()), av.cols);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (int j = 0; j < av.cols; ++j)
      out(static_cast<int>(i), j) = av(ids[i], j);
  const int aid = a.id;
  return t.emit(std::move(out), [aid, ids = std::move(ids)](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    Array& ga = t.grad_at(aid);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < g.cols; ++j)
        ga(ids[i], j) += g(static_cast<int>(i), j);
  });
}

// base with rows[j] substituted at row ids[j]; replaced rows route their
// gradient to `rows`, untouched rows to `base`. ids must be distinct.
inline Var scatter_rows(const Var& base, const Var& rows, std::vector<int> ids) {
  Tape& t = detail::same_tape(base, rows);
  const Array& bv = t.value(base);
  const Array& rv = t.value(rows);
  if (rv.cols != bv.cols || rv.rows != static_cast<int>(ids.size()))
    throw ShapeError("scatter_rows: rows must be " + std::to_string(ids.size()) +
                     "x" + std::to_string(bv.cols) + ", got " + rv.shape_str());
  std::vector<char> seen(static_cast<std::size_t>(bv.rows), 0);
  for (int id : ids) {
    if (id < 0 || id >= bv.rows)
      throw IndexError("scatter_rows: row " + std::to_string(id) +
                       " out of range [0, " + std::to_string(bv.rows) + ")");
    if (seen[id]++) throw IndexError("scatter_rows: duplicate row id " + std::to_string(id));
  }
  Array out = bv;
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (int j = 0; j < bv.cols; ++j)
      out(ids[i], j) = rv(static_cast<int>(i), j);
  const int bid = base.id, rid = rows.id;
  return t.emit(std::move(out), [bid, rid, ids = std::move(ids)](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    Array& gb = t.grad_at(bid);
    Array& gr = t.grad_at(rid);
    std::vector<char> replaced(static_cast<std::size_t>(g.rows), 0);
    for (int id : ids) replaced[id] = 1;
    for (int i = 0; i < g.rows; ++i) {
      if (replaced[i]) continue;
      for (int j = 0; j < g.cols; ++j) gb(i, j) += g(i, j);
    }
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < g.cols; ++j)
        gr(static_cast<int>(i), j) += g(ids[i], j);
  });
}

// ---- pointwise ops ----

enum class Activation { sigmoid, tanh, leaky_relu };

inline constexpr double kLeakySlope = 0.01;

inline Var elementwise(const Var& a, Activation kind) {
  Tape& t = *a.tape;
  const Array& av = t.value(a);
  Array out = av;
  switch (kind) {
    case Activation::sigmoid:
      for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
      break;
    case Activation::tanh:
      for (double& x : out.v) x = std::tanh(x);
      break;
    case Activation::leaky_relu:
      for (double& x : out.v) x = x >= 0.0 ? x : kLeakySlope * x;
      break;
  }
  const int aid = a.id;
  return t.emit(std::move(out), [aid, kind](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    const Array& y = t.value_at(self);
    const Array& x = t.value_at(aid);
    Array& ga = t.grad_at(aid);
    switch (kind) {
      case Activation::sigmoid:
        for (std::size_t i = 0; i < g.size(); ++i)
          ga.v[i] += g.v[i] * y.v[i] * (1.0 - y.v[i]);
        break;
      case Activation::tanh:
        for (std::size_t i = 0; i < g.size(); ++i)
          ga.v[i] += g.v[i] * (1.0 - y.v[i] * y.v[i]);
        break;
      case Activation::leaky_relu:
        for (std::size_t i = 0; i < g.size(); ++i)
          ga.v[i] += g.v[i] * (x.v[i] >= 0.0 ? 1.0 : kLeakySlope);
        break;
    }
  });
}

inline Var sigmoid(const Var& a) { return elementwise(a, Activation::sigmoid); }
inline Var tanh_op(const Var& a) { return elementwise(a, Activation::tanh); }
inline Var leaky_relu(const Var& a) { return elementwise(a, Activation::leaky_relu); }

// Softmax over the entries of a vector (1 x n or n x 1). Subtracts the max
// logit before exponentiation; entries sum to 1.
inline Var softmax_vec(const Var& a) {
  Tape& t = *a.tape;
  const Array& av = t.value(a);
  if (!av.is_vector())
    throw ShapeError("softmax_vec: expected a vector, got " + av.shape_str());
  double mx = av.v[0];
  for (double x : av.v) mx = std::max(mx, x);
  Array out = av;
  double sum = 0.0;
  for (double& x : out.v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : out.v) x /= sum;
  const int aid = a.id;
  return t.emit(std::move(out), [aid](Tape& t, int self) {
    const Array& g = t.grad_at(self);
    const Array& w = t.value_at(self);
    Array& ga = t.grad_at(aid);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g.v[i] * w.v[i];
    for (std::size_t i = 0; i < g.size(); ++i)
      ga.v[i] += w.v[i] * (g.v[i] - dot);
  });
}

// affine helper: x * W^T + b where W is out x in and b is 1 x out.
inline Var affine(const Var& x, const Var& w, const Var& b) {
  return add_rowvec(matmul_nt(x, w), b);
}

// ---- gradient checking ----

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  double step = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  std::vector<GradCheckEntry> entries;

  const GradCheckEntry* worst() const {
    const GradCheckEntry* w = nullptr;
    for (const auto& e : entries)
      if (!w || e.max_rel_err > w->max_rel_err) w = &e;
    return w;
  }
};

using NamedArray = std::pair<std::string, Array>;

// Builds a forward pass on the given tape from leaf vars (one per named
// parameter, same order) and returns the scalar loss var.
using ForwardFn = std::function<Var(Tape&, std::span<const Var>)>;

// rel = |analytic - numeric| / max(|analytic|, |numeric|, floor). The floor
// keeps finite-difference rounding noise on near-zero gradients from
// registering as relative error.
inline double grad_rel_err(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

// Compares analytic gradients with central finite differences per
// parameter. The numeric side uses forward evaluations only, so it is
// independent of the backward pass it validates.
inline GradCheckReport grad_check(const ForwardFn& f,
                                  const std::vector<NamedArray>& params,
                                  double step = 1e-5, double tolerance = 1e-4,
                                  double denom_floor = 1e-2) {
  GradCheckReport report;
  report.step = step;
  report.tolerance = tolerance;

  const auto run_loss = [&](const std::vector<NamedArray>& ps) {
    Tape t;
    std::vector<Var> vars;
    vars.reserve(ps.size());
    for (const auto& [name, arr] : ps) vars.push_back(t.leaf(arr));
    const Var loss = f(t, vars);
    return t.value(loss).scalar();
  };

  // analytic gradients
  std::vector<Array> analytic;
  {
    Tape t;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const auto& [name, arr] : params) vars.push_back(t.leaf(arr));
    const Var loss = f(t, vars);
    t.backward(loss);
    for (const Var& v : vars) analytic.push_back(t.grad(v));
  }

  std::vector<NamedArray> work = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    GradCheckEntry entry;
    entry.name = params[p].first;
    Array& arr = work[p].second;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const double orig = arr.v[i];
      arr.v[i] = orig + step;
      const double up = run_loss(work);
      arr.v[i] = orig - step;
      const double dn = run_loss(work);
      arr.v[i] = orig;
      const double numeric = (up - dn) / (2.0 * step);
      const double a = analytic[p].v[i];
      entry.max_abs_err = std::max(entry.max_abs_err, std::abs(a - numeric));
      entry.max_rel_err =
          std::max(entry.max_rel_err, grad_rel_err(a, numeric, denom_floor));
    }
    entry.pass = entry.max_rel_err <= tolerance;
    report.pass = report.pass && entry.pass;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace hgnn::diff
