#pragma once

// Randomized finite-difference suites behind `hgnn gradcheck` and the
// acceptance gate: one case per differentiable operation, an optional
// corrupted-adjoint negative control, and an end-to-end model check on a
// toy instance (4 stocks, 2 industries).

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hgnn/baselines.hpp"
#include "hgnn/data.hpp"
#include "hgnn/diff.hpp"
#include "hgnn/graph.hpp"
#include "hgnn/model.hpp"
#include "hgnn/rng.hpp"
#include "hgnn/train.hpp"

namespace hgnn::gradsuite {

using diff::ForwardFn;
using diff::NamedArray;
using diff::Tape;
using diff::Var;

namespace detail {

inline Array rand_array(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Array a(r, c);
  for (double& x : a.v) x = rng.uniform(lo, hi);
  return a;
}

// Uniform magnitude in [0.1, 1) with random sign, keeping entries away from
// the leaky-relu kink where finite differences are invalid.
inline Array rand_array_off_zero(int r, int c, Rng& rng) {
  Array a(r, c);
  for (double& x : a.v) x = rng.uniform(0.1, 1.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
  return a;
}

// Weighted sum with distinct fixed weights, so per-entry adjoint errors
// cannot cancel in the scalar loss.
inline Var mix_to_scalar(Tape& t, const Var& out) {
  Array w(out.rows, out.cols);
  for (std::size_t i = 0; i < w.size(); ++i)
    w.v[i] = 0.3 + 0.1 * static_cast<double>(i % 17);
  return diff::reduce_sum(diff::hadamard(out, t.constant(std::move(w))));
}

// Sigmoid whose pull drops the (1 - y) factor; the negative control that
// gradcheck --inject-bug must catch.
inline Var buggy_sigmoid(Tape& t, const Var& x) {
  const Array& xv = t.value(x);
  Array out(xv.rows, xv.cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = 1.0 / (1.0 + std::exp(-xv.v[i]));
  const int xid = x.id;
  return t.emit(std::move(out), [xid](Tape& t, int self) {
    const Array& y = t.value_at(self);
    const Array& g = t.grad_at(self);
    Array& gx = t.grad_at(xid);
    for (std::size_t i = 0; i < y.size(); ++i) gx.v[i] += g.v[i] * y.v[i];
  });
}

}  // namespace detail

struct OpCase {
  std::string name;
  std::vector<NamedArray> params;
  ForwardFn forward;
};

// One randomized case per op. Shapes are small and non-square so transposed
// or misrouted adjoints break loudly.
inline std::vector<OpCase> op_cases(std::uint64_t seed, bool inject_bug = false) {
  std::vector<OpCase> cases;
  const auto rng_for = [seed](const std::string& name) {
    return Rng(mix_seed(seed, "gradsuite." + name));
  };
  const auto unary = [&](const std::string& name, Array x, auto op) {
    cases.push_back({name,
                     {{"x", std::move(x)}},
                     [op](Tape& t, std::span<const Var> v) {
                       return detail::mix_to_scalar(t, op(t, v[0]));
                     }});
  };
  const auto binary = [&](const std::string& name, Array a, Array b, auto op) {
    cases.push_back({name,
                     {{"a", std::move(a)}, {"b", std::move(b)}},
                     [op](Tape& t, std::span<const Var> v) {
                       return detail::mix_to_scalar(t, op(t, v[0], v[1]));
                     }});
  };

  {
    Rng r = rng_for("matmul");
    binary("matmul", detail::rand_array(3, 4, r), detail::rand_array(4, 2, r),
           [](Tape&, const Var& a, const Var& b) { return diff::matmul(a, b); });
  }
  {
    Rng r = rng_for("matmul_nt");
    binary("matmul_nt", detail::rand_array(3, 4, r), detail::rand_array(2, 4, r),
           [](Tape&, const Var& a, const Var& b) { return diff::matmul_nt(a, b); });
  }
  {
    Rng r = rng_for("transpose");
    unary("transpose", detail::rand_array(3, 4, r),
          [](Tape&, const Var& x) { return diff::transpose(x); });
  }
  {
    Rng r = rng_for("add");
    binary("add", detail::rand_array(3, 4, r), detail::rand_array(3, 4, r),
           [](Tape&, const Var& a, const Var& b) { return diff::add(a, b); });
  }
  {
    Rng r = rng_for("add_rowvec");
    binary("add_rowvec", detail::rand_array(3, 4, r), detail::rand_array(1, 4, r),
           [](Tape&, const Var& a, const Var& b) { return diff::add_rowvec(a, b); });
  }
  {
    Rng r = rng_for("hadamard");
    binary("hadamard", detail::rand_array(3, 4, r), detail::rand_array(3, 4, r),
           [](Tape&, const Var& a, const Var& b) { return diff::hadamard(a, b); });
  }
  {
    Rng r = rng_for("scale");
    unary("scale", detail::rand_array(3, 4, r),
          [](Tape&, const Var& x) { return diff::scale(x, -1.3); });
  }
  {
    Rng r = rng_for("concat_rows");
    binary("concat_rows", detail::rand_array(2, 4, r), detail::rand_array(3, 4, r),
           [](Tape&, const Var& a, const Var& b) { return diff::concat_rows(a, b); });
  }
  {
    Rng r = rng_for("concat_cols");
    binary("concat_cols", detail::rand_array(3, 2, r), detail::rand_array(3, 3, r),
           [](Tape&, const Var& a, const Var& b) { return diff::concat_cols(a, b); });
  }
  {
    Rng r = rng_for("repeat_rows");
    unary("repeat_rows", detail::rand_array(1, 4, r),
          [](Tape&, const Var& x) { return diff::repeat_rows(x, 3); });
  }
  {
    Rng r = rng_for("reduce_sum");
    cases.push_back({"reduce_sum",
                     {{"x", detail::rand_array(3, 4, r)}},
                     [](Tape&, std::span<const Var> v) { return diff::reduce_sum(v[0]); }});
  }
  {
    Rng r = rng_for("gather_rows");
    unary("gather_rows", detail::rand_array(5, 3, r), [](Tape&, const Var& x) {
      return diff::gather_rows(x, {3, 0, 3});  // duplicate id exercises accumulation
    });
  }
  {
    Rng r = rng_for("scatter_rows");
    binary("scatter_rows", detail::rand_array(5, 3, r), detail::rand_array(2, 3, r),
           [](Tape&, const Var& a, const Var& b) {
             return diff::scatter_rows(a, b, {1, 4});
           });
  }
  {
    Rng r = rng_for("sigmoid");
    unary("sigmoid", detail::rand_array(3, 4, r),
          [](Tape&, const Var& x) { return diff::sigmoid(x); });
  }
  {
    Rng r = rng_for("tanh");
    unary("tanh", detail::rand_array(3, 4, r),
          [](Tape&, const Var& x) { return diff::tanh_op(x); });
  }
  {
    Rng r = rng_for("leaky_relu");
    unary("leaky_relu", detail::rand_array_off_zero(3, 4, r),
          [](Tape&, const Var& x) { return diff::leaky_relu(x); });
  }
  {
    Rng r = rng_for("softmax_vec");
    unary("softmax_vec", detail::rand_array(5, 1, r),
          [](Tape&, const Var& x) { return diff::softmax_vec(x); });
  }
  {
    Rng r = rng_for("affine");
    Array x = detail::rand_array(3, 4, r);
    Array w = detail::rand_array(2, 4, r);
    Array b = detail::rand_array(1, 2, r);
    cases.push_back({"affine",
                     {{"x", std::move(x)}, {"w", std::move(w)}, {"b", std::move(b)}},
                     [](Tape& t, std::span<const Var> v) {
                       return detail::mix_to_scalar(t, diff::affine(v[0], v[1], v[2]));
                     }});
  }
  {
    Rng r = rng_for("graph_aggregate");
    // Two cliques of different size plus an isolated node.
    auto g = std::make_shared<graph::IndustryGraph>(graph::IndustryGraph::build(
        {{"A0", "X"}, {"A1", "X"}, {"A2", "X"}, {"B0", "Y"}, {"B1", "Y"}, {"C0", "Z"}}));
    unary("graph_aggregate", detail::rand_array(g->node_count(), 3, r),
          [g](Tape&, const Var& x) { return graph::graph_aggregate(x, *g); });
  }
  {
    Rng r = rng_for("bce_with_logits");
    cases.push_back({"bce_with_logits",
                     {{"z", detail::rand_array(4, 1, r, -2.0, 2.0)}},
                     [](Tape&, std::span<const Var> v) {
                       return train::bce_with_logits(v[0], {1, 0, 1, 0});
                     }});
  }
  if (inject_bug) {
    Rng r = rng_for("injected_bug");
    unary("injected_bug", detail::rand_array(3, 3, r),
          [](Tape& t, const Var& x) { return detail::buggy_sigmoid(t, x); });
  }
  return cases;
}

// Runs every op case and merges the per-parameter entries into one report,
// entry names "op.param".
inline diff::GradCheckReport run_op_suite(std::uint64_t seed, bool inject_bug = false) {
  diff::GradCheckReport merged;
  bool first = true;
  for (const auto& c : op_cases(seed, inject_bug)) {
    diff::GradCheckReport r = diff::grad_check(c.forward, c.params);
    if (first) {
      merged.step = r.step;
      merged.tolerance = r.tolerance;
      first = false;
    }
    for (auto& e : r.entries) {
      e.name = c.name + "." + e.name;
      merged.pass = merged.pass && e.pass;
      merged.entries.push_back(std::move(e));
    }
  }
  return merged;
}

// Full-model check: BCE loss of the complete HGNN (all views, curb fusion)
// on a toy day, differentiated against every parameter.
inline diff::GradCheckReport end_to_end_check(std::uint64_t seed) {
  model::HgnnConfig cfg;
  cfg.T = 5;
  cfg.U = 4;
  cfg.V = 3;
  cfg.mlp_hidden_dims = {4};
  auto m = model::make_model("hgnn", cfg, seed);

  const auto g = std::make_shared<graph::IndustryGraph>(graph::IndustryGraph::build(
      {{"S0", "A"}, {"S1", "A"}, {"S2", "B"}, {"S3", "B"}}));

  Rng rng(mix_seed(seed, "gradsuite.e2e"));
  auto batch = std::make_shared<data::DayBatch>();
  batch->day = 7;
  batch->has_history.assign(4, 1);
  for (int t = 0; t < cfg.T; ++t)
    batch->steps.push_back(detail::rand_array(4, cfg.F, rng));
  for (int node : {1, 2}) {
    data::EventSample ev;
    ev.node_index = node;
    ev.stock_id = g->stock_id(node);
    ev.curb_price = 11.0;
    for (double& d : ev.indicators) d = rng.uniform(-1.0, 1.0);
    ev.label = node == 1 ? 1 : 0;
    batch->events.push_back(std::move(ev));
  }
  const std::vector<int> labels{1, 0};

  std::vector<NamedArray> params;
  for (std::size_t i = 0; i < m->params.count(); ++i)
    params.emplace_back(m->params.name(i), m->params.array(i));

  const auto model = std::shared_ptr<model::ModelBase>(std::move(m));
  const ForwardFn fwd = [model, g, batch, labels](Tape& t, std::span<const Var> vars) {
    const Var logits = model->forward(t, vars, *batch, g.get());
    return train::bce_with_logits(logits, labels);
  };
  diff::GradCheckReport r = diff::grad_check(fwd, params);
  for (auto& e : r.entries) e.name = "model." + e.name;
  return r;
}

}  // namespace hgnn::gradsuite
