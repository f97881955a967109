#pragma once

// Reference models sharing the HGNN's primitives, loss, and training loop:
// logistic regression on flattened features, a plain LSTM classifier, and
// a one-layer GCN classifier.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hgnn/model.hpp"

namespace hgnn::model {

class LogRegModel : public ModelBase {
 public:
  LogRegModel(const HgnnConfig& c, std::uint64_t seed) {
    c.validate();
    kind = "logreg";
    preset = "-";
    cfg = c;
    params.add("w", 1, c.T * c.F + data::kIndicatorCount);
    params.add("b", 1, 1);
    detail::fill_params(params, seed);
  }

  bool needs_graph() const override { return false; }

  Var forward(Tape& t, std::span<const Var> p, const data::DayBatch& batch,
              const graph::IndustryGraph*) const override {
    if (batch.events.empty()) throw ContractError("forward: day batch has no curb stocks");
    const int k = static_cast<int>(batch.events.size());
    Array x(k, cfg.T * cfg.F + data::kIndicatorCount);
    for (int i = 0; i < k; ++i) {
      const int s = batch.events[i].node_index;
      for (int step = 0; step < cfg.T; ++step)
        for (int f = 0; f < cfg.F; ++f)
          x(i, step * cfg.F + f) = batch.steps[step](s, f);
      for (int j = 0; j < data::kIndicatorCount; ++j)
        x(i, cfg.T * cfg.F + j) = batch.events[i].indicators[j];
    }
    return diff::affine(t.constant(std::move(x)), p[params.index_of("w")],
                        p[params.index_of("b")]);
  }
};

class LstmModel : public ModelBase {
 public:
  LstmModel(const HgnnConfig& c, std::uint64_t seed) {
    c.validate();
    kind = "lstm";
    preset = "-";
    cfg = c;
    register_lstm(params, "lstm", c.U, c.F);
    params.add("clf.Q", 1, c.U);
    params.add("clf.b", 1, 1);
    detail::fill_params(params, seed);
  }

  bool needs_graph() const override { return false; }

  Var forward(Tape& t, std::span<const Var> p, const data::DayBatch& batch,
              const graph::IndustryGraph*) const override {
    if (batch.events.empty()) throw ContractError("forward: day batch has no curb stocks");
    const auto nodes = detail::event_nodes(batch);
    std::vector<Var> steps;
    steps.reserve(batch.steps.size());
    for (const Array& st : batch.steps)
      steps.push_back(t.constant(gather_rows_array(st, nodes)));
    const Var h = lstm_encode_steps(t, steps, pack_lstm(params, p, "lstm"));
    return diff::add_rowvec(diff::matmul_nt(h, p[params.index_of("clf.Q")]),
                            p[params.index_of("clf.b")]);
  }
};

class GcnModel : public ModelBase {
 public:
  GcnModel(const HgnnConfig& c, std::uint64_t seed) {
    c.validate();
    kind = "gcn";
    preset = "-";
    cfg = c;
    register_lstm(params, "lstm", c.U, c.F);
    params.add("graph.pi", c.U, c.U);
    params.add("head.q", 1, c.U);
    params.add("head.b", 1, 1);
    detail::fill_params(params, seed);
  }

  bool needs_graph() const override { return true; }

  Var forward(Tape& t, std::span<const Var> p, const data::DayBatch& batch,
              const graph::IndustryGraph* g) const override {
    if (batch.events.empty()) throw ContractError("forward: day batch has no curb stocks");
    if (g == nullptr) throw ContractError("forward: gcn requires the graph");
    const auto nodes = detail::event_nodes(batch);
    std::vector<Var> steps;
    steps.reserve(batch.steps.size());
    for (const Array& st : batch.steps) steps.push_back(t.constant(st));
    Var h = lstm_encode_steps(t, steps, pack_lstm(params, p, "lstm"));
    h = diff::hadamard(h, t.constant(detail::history_mask(batch, cfg.U)));
    const Var a = diff::tanh_op(graph_convolve(h, *g, p[params.index_of("graph.pi")]));
    const Var a_curb = diff::gather_rows(a, nodes);
    return diff::add_rowvec(diff::matmul_nt(a_curb, p[params.index_of("head.q")]),
                            p[params.index_of("head.b")]);
  }
};

// View presets for experiment rows. "m" and "i" are the short aliases used
// in the comparison table.
inline HgnnConfig apply_preset(HgnnConfig cfg, const std::string& preset) {
  if (preset == "node") {
    cfg.view_relation = false;
    cfg.view_market = false;
  } else if (preset == "node_relation") {
    cfg.view_relation = true;
    cfg.view_market = false;
  } else if (preset == "node_market" || preset == "m") {
    cfg.view_relation = false;
    cfg.view_market = true;
  } else if (preset == "full" || preset == "node_relation_market" || preset == "i") {
    cfg.view_relation = true;
    cfg.view_market = true;
  } else {
    throw ConfigError("unknown view preset '" + preset + "'");
  }
  return cfg;
}

inline std::unique_ptr<ModelBase> make_model(const std::string& kind,
                                             const HgnnConfig& cfg, std::uint64_t seed) {
  if (kind == "hgnn") return std::make_unique<HgnnModel>(cfg, seed);
  if (kind == "logreg") return std::make_unique<LogRegModel>(cfg, seed);
  if (kind == "lstm") return std::make_unique<LstmModel>(cfg, seed);
  if (kind == "gcn") return std::make_unique<GcnModel>(cfg, seed);
  throw ConfigError("unknown model kind '" + kind + "'");
}

}  // namespace hgnn::model
