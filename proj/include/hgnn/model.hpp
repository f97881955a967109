#pragma once

// The hierarchical model: LSTM history encoder, curb-indicator MLP, node
// fusion, industry graph convolution, market attention pooling, view
// concatenation, linear classifier. Stocks are matrix rows, so one tape
// processes a whole day.

#include <cassert>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hgnn/array.hpp"
#include "hgnn/data.hpp"
#include "hgnn/diff.hpp"
#include "hgnn/graph.hpp"
#include "hgnn/params.hpp"

namespace hgnn::model {

using diff::Tape;
using diff::Var;

struct HgnnConfig {
  int T = 5;
  int F = data::kFeatureCount;
  int U = 8;  // LSTM memory cells / node state width
  int V = 8;  // attention hidden width
  std::vector<int> mlp_hidden_dims{16};
  bool view_relation = true;  // the node view is always on
  bool view_market = true;
  bool use_curb_features = true;  // fuse the indicator MLP into curb nodes

  enum class Aggregand { relation, node };
  Aggregand market_aggregand = Aggregand::relation;

  void validate() const {
    if (T < 1 || F < 1 || U < 1 || V < 1)
      throw ConfigError("model dims must be positive");
    for (int h : mlp_hidden_dims)
      if (h < 1) throw ConfigError("mlp hidden dims must be positive");
  }

  int n_views() const { return 1 + (view_relation ? 1 : 0) + (view_market ? 1 : 0); }
  bool needs_graph() const { return view_relation || view_market; }

  std::string views_name() const {
    std::string s = "node";
    if (view_relation) s += "_relation";
    if (view_market) s += "_market";
    return s;
  }
};

// ---- shared building blocks ----

struct LstmVarPack {
  Var Wi, bi, Wr, br, Wo, bo, Pu, Qu, bu;
};

inline void register_lstm(ParamStore& ps, const std::string& prefix, int U, int F) {
  ps.add(prefix + ".Wi", U, U + F);
  ps.add(prefix + ".bi", 1, U);
  ps.add(prefix + ".Wr", U, U + F);
  ps.add(prefix + ".br", 1, U);
  ps.add(prefix + ".Wo", U, U + F);
  ps.add(prefix + ".bo", 1, U);
  ps.add(prefix + ".Pu", U, F);
  ps.add(prefix + ".Qu", U, U);
  ps.add(prefix + ".bu", 1, U);
}

inline LstmVarPack pack_lstm(const ParamStore& ps, std::span<const Var> p,
                             const std::string& prefix) {
  const auto v = [&](const char* n) { return p[ps.index_of(prefix + "." + n)]; };
  return {v("Wi"), v("bi"), v("Wr"), v("br"), v("Wo"), v("bo"),
          v("Pu"), v("Qu"), v("bu")};
}

// Runs the recurrence over T step matrices (rows = stocks) and returns the
// final hidden state. Gates read [h ; x]; the candidate uses its own maps
// of x and h; r is the forget gate.
inline Var lstm_encode_steps(Tape& t, std::span<const Var> steps, const LstmVarPack& lp) {
  if (steps.empty()) throw ContractError("lstm_encode: no steps");
  const int n = steps[0].rows;
  const int U = t.value(lp.Qu).rows;
  Var h = t.constant(Array(n, U, 0.0));
  Var c = t.constant(Array(n, U, 0.0));
  for (const Var& x : steps) {
    const Var hx = diff::concat_cols(h, x);
    const Var gi = diff::sigmoid(diff::affine(hx, lp.Wi, lp.bi));
    const Var gr = diff::sigmoid(diff::affine(hx, lp.Wr, lp.br));
    const Var go = diff::sigmoid(diff::affine(hx, lp.Wo, lp.bo));
    const Var u = diff::tanh_op(diff::add_rowvec(
        diff::add(diff::matmul_nt(x, lp.Pu), diff::matmul_nt(h, lp.Qu)), lp.bu));
    c = diff::add(diff::hadamard(gr, c), diff::hadamard(gi, u));
    h = diff::hadamard(go, diff::tanh_op(c));
  }
  return h;
}

struct MlpVarPack {
  std::vector<Var> weights, biases;  // weights[i] is out x in
};

inline void register_mlp(ParamStore& ps, const std::string& prefix, int in_dim,
                         const std::vector<int>& hidden, int out_dim) {
  std::vector<int> dims{in_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    ps.add(prefix + ".W" + std::to_string(l), dims[l + 1], dims[l]);
    ps.add(prefix + ".b" + std::to_string(l), 1, dims[l + 1]);
  }
}

inline MlpVarPack pack_mlp(const ParamStore& ps, std::span<const Var> p,
                           const std::string& prefix, std::size_t n_layers) {
  MlpVarPack mp;
  for (std::size_t l = 0; l < n_layers; ++l) {
    mp.weights.push_back(p[ps.index_of(prefix + ".W" + std::to_string(l))]);
    mp.biases.push_back(p[ps.index_of(prefix + ".b" + std::to_string(l))]);
  }
  return mp;
}

// LeakyReLU between layers, bare affine output.
inline Var mlp_forward(Tape& t, const Var& x, const MlpVarPack& mp) {
  (void)t;
  Var y = x;
  for (std::size_t l = 0; l < mp.weights.size(); ++l) {
    y = diff::affine(y, mp.weights[l], mp.biases[l]);
    if (l + 1 < mp.weights.size()) y = diff::leaky_relu(y);
  }
  return y;
}

// a_s = sum_{j in N_s U {s}} (pi e_j) / r_{j,s}, batched over rows.
inline Var graph_convolve(const Var& e, const graph::IndustryGraph& g, const Var& pi) {
  return diff::matmul_nt(graph::graph_aggregate(e, g), pi);
}

struct AttentionOut {
  Var weights;  // n x 1, sums to 1
  Var pooled;   // 1 x U
};

// eta_s = P_a^T tanh(Q_a a_s + b_a); w = softmax(eta); pooled = w^T * src.
inline AttentionOut market_attention(Tape& t, const Var& a, const Var& src,
                                     const Var& Pa, const Var& Qa, const Var& ba) {
  const Var hidden = diff::tanh_op(diff::affine(a, Qa, ba));
  const Var eta = diff::matmul_nt(hidden, Pa);
  const Var w = diff::softmax_vec(eta);
#ifndef NDEBUG
  {
    double s = 0;
    for (double x : t.value(w).v) s += x;
    assert(std::abs(s - 1.0) <= 1e-12 && "attention weights must sum to 1");
  }
#endif
  const Var pooled = diff::matmul(diff::transpose(w), src);
  return {w, pooled};
}

inline Array gather_rows_array(const Array& a, const std::vector<int>& ids) {
  Array out(static_cast<int>(ids.size()), a.cols);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (int j = 0; j < a.cols; ++j) out(static_cast<int>(i), j) = a(ids[i], j);
  return out;
}

// ---- model interface ----

class ModelBase {
 public:
  virtual ~ModelBase() = default;

  std::string kind;    // hgnn | logreg | lstm | gcn
  std::string preset;  // view set for hgnn rows, "-" for baselines
  HgnnConfig cfg;
  ParamStore params;

  virtual bool needs_graph() const = 0;

  // Logits (k x 1) for the batch's curb stocks, in event order. `p` is the
  // leased parameter list in store order.
  virtual Var forward(Tape& t, std::span<const Var> p, const data::DayBatch& batch,
                      const graph::IndustryGraph* g) const = 0;

  Var forward_owned(Tape& t, const data::DayBatch& batch,
                    const graph::IndustryGraph* g) const {
    const auto p = params.lease(t);
    return forward(t, p, batch, g);
  }
};

namespace detail {

inline void fill_params(ParamStore& ps, std::uint64_t seed) {
  Rng rng(mix_seed(seed, "init"));
  for (std::size_t i = 0; i < ps.count(); ++i) {
    Array& a = ps.array(i);
    const bool is_bias = ps.name(i).find(".b") != std::string::npos;
    if (!is_bias) xavier_fill(a, rng);  // biases stay zero
  }
}

inline std::vector<int> event_nodes(const data::DayBatch& batch) {
  std::vector<int> ids;
  ids.reserve(batch.events.size());
  for (const auto& ev : batch.events) ids.push_back(ev.node_index);
  return ids;
}

inline Array indicator_matrix(const data::DayBatch& batch) {
  Array d(static_cast<int>(batch.events.size()), data::kIndicatorCount);
  for (std::size_t i = 0; i < batch.events.size(); ++i)
    for (int k = 0; k < data::kIndicatorCount; ++k)
      d(static_cast<int>(i), k) = batch.events[i].indicators[k];
  return d;
}

inline Array history_mask(const data::DayBatch& batch, int U) {
  Array m(static_cast<int>(batch.has_history.size()), U, 0.0);
  for (int s = 0; s < m.rows; ++s)
    if (batch.has_history[s])
      for (int j = 0; j < U; ++j) m(s, j) = 1.0;
  return m;
}

}  // namespace detail

class HgnnModel : public ModelBase {
 public:
  HgnnModel(const HgnnConfig& c, std::uint64_t seed) {
    c.validate();
    kind = "hgnn";
    cfg = c;
    preset = c.views_name();
    register_lstm(params, "lstm", c.U, c.F);
    if (c.use_curb_features) {
      register_mlp(params, "mlp", data::kIndicatorCount, c.mlp_hidden_dims, c.U);
      params.add("fuse.Wf", 2 * c.U, c.U);
      params.add("fuse.bf", 1, c.U);
    }
    if (c.needs_graph()) params.add("graph.pi", c.U, c.U);
    if (c.view_market) {
      params.add("attn.Pa", 1, c.V);
      params.add("attn.Qa", c.V, c.U);
      params.add("attn.ba", 1, c.V);
    }
    params.add("clf.Q", 1, c.n_views() * c.U);
    params.add("clf.b", 1, 1);
    detail::fill_params(params, seed);
  }

  bool needs_graph() const override { return cfg.needs_graph(); }

  Var forward(Tape& t, std::span<const Var> p, const data::DayBatch& batch,
              const graph::IndustryGraph* g) const override {
    if (batch.events.empty()) throw ContractError("forward: day batch has no curb stocks");
    const auto nodes = detail::event_nodes(batch);
    const auto lp = pack_lstm(params, p, "lstm");
    const int k = static_cast<int>(nodes.size());

    const auto fuse_curb = [&](const Var& h_curb) {
      if (!cfg.use_curb_features) return h_curb;
      const auto mp = pack_mlp(params, p, "mlp", cfg.mlp_hidden_dims.size() + 1);
      const Var l = mlp_forward(t, t.constant(detail::indicator_matrix(batch)), mp);
      const Var hl = diff::concat_cols(h_curb, l);
      return diff::tanh_op(diff::add_rowvec(
          diff::matmul(hl, p[params.index_of("fuse.Wf")]),
          p[params.index_of("fuse.bf")]));
    };
    const Var Q = p[params.index_of("clf.Q")];
    const Var b = p[params.index_of("clf.b")];

    if (!cfg.needs_graph()) {
      // Node-only runs never touch the graph: encode just the curb stocks.
      std::vector<Var> steps;
      steps.reserve(batch.steps.size());
      for (const Array& st : batch.steps)
        steps.push_back(t.constant(gather_rows_array(st, nodes)));
      const Var h_curb = lstm_encode_steps(t, steps, lp);
      const Var e_curb = fuse_curb(h_curb);
      return diff::add_rowvec(diff::matmul_nt(e_curb, Q), b);
    }

    if (g == nullptr) throw ContractError("forward: this view set requires the graph");
    if (g->node_count() != static_cast<int>(batch.has_history.size()))
      throw ShapeError("forward: graph nodes != batch stocks");

    std::vector<Var> steps;
    steps.reserve(batch.steps.size());
    for (const Array& st : batch.steps) steps.push_back(t.constant(st));
    Var h_all = lstm_encode_steps(t, steps, lp);
    h_all = diff::hadamard(h_all, t.constant(detail::history_mask(batch, cfg.U)));

    Var e_all{};
    Var e_curb{};
    if (cfg.use_curb_features) {
      e_curb = fuse_curb(diff::gather_rows(h_all, nodes));
      e_all = diff::scatter_rows(h_all, e_curb, nodes);
    } else {
      e_all = h_all;
      e_curb = diff::gather_rows(e_all, nodes);
    }

    const Var A = graph_convolve(e_all, *g, p[params.index_of("graph.pi")]);

    std::vector<Var> views{e_curb};
    if (cfg.view_relation) views.push_back(diff::gather_rows(A, nodes));
    if (cfg.view_market) {
      const Var& src = cfg.market_aggregand == HgnnConfig::Aggregand::relation ? A : e_all;
      const auto att = market_attention(t, A, src, p[params.index_of("attn.Pa")],
                                        p[params.index_of("attn.Qa")],
                                        p[params.index_of("attn.ba")]);
      views.push_back(diff::repeat_rows(att.pooled, k));
    }
    Var H = views[0];
    for (std::size_t i = 1; i < views.size(); ++i) H = diff::concat_cols(H, views[i]);
    return diff::add_rowvec(diff::matmul_nt(H, Q), b);
  }
};

}  // namespace hgnn::model
