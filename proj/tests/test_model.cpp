#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hgnn/baselines.hpp"
#include "hgnn/model.hpp"
#include "hgnn/rng.hpp"
#include "hgnn/train.hpp"

using namespace hgnn;
using diff::Tape;
using diff::Var;

namespace {

model::HgnnConfig small_cfg() {
  model::HgnnConfig c;
  c.T = 3;
  c.F = data::kFeatureCount;
  c.U = 8;
  c.V = 3;
  c.mlp_hidden_dims = {4};
  return c;
}

// A fully populated universe: n stocks, two industries, every stock has
// history, events at the given node indices.
struct Fixture {
  data::DayBatch batch;
  std::map<std::string, std::string> industry_of;
  graph::IndustryGraph graph;
};

Fixture make_fixture(int n, int T, int F, const std::vector<int>& event_nodes,
                     const std::vector<int>& labels, std::uint64_t seed) {
  Fixture fx;
  Rng rng(mix_seed(seed, "model-fixture"));
  fx.batch.day = T;
  for (int step = 0; step < T; ++step) {
    Array a(n, F);
    for (double& x : a.v) x = rng.uniform(-1.0, 1.0);
    fx.batch.steps.push_back(std::move(a));
  }
  fx.batch.has_history.assign(static_cast<std::size_t>(n), 1);
  for (std::size_t i = 0; i < event_nodes.size(); ++i) {
    data::EventSample ev;
    ev.node_index = event_nodes[i];
    char buf[8];
    std::snprintf(buf, sizeof buf, "S%02d", event_nodes[i]);
    ev.stock_id = buf;
    ev.label = labels[i];
    for (auto& d : ev.indicators) d = rng.uniform(-0.5, 0.5);
    fx.batch.events.push_back(ev);
  }
  for (int s = 0; s < n; ++s) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "S%02d", s);
    fx.industry_of[buf] = s < (n + 1) / 2 ? "IA" : "IB";
  }
  fx.graph = graph::IndustryGraph::build(fx.industry_of);
  return fx;
}

void zero_params(model::ModelBase& m) {
  for (std::size_t i = 0; i < m.params.count(); ++i)
    for (double& x : m.params.array(i).v) x = 0.0;
}

std::vector<double> logits_of(const model::ModelBase& m, const data::DayBatch& batch,
                              const graph::IndustryGraph* g) {
  Tape t;
  const Var z = m.forward_owned(t, batch, g);
  return t.value(z).v;
}

}  // namespace

TEST(Params, ShapesFollowConfig) {
  const auto c = small_cfg();
  model::HgnnModel m(c, 11);
  EXPECT_EQ(m.params.at("lstm.Pu").rows, c.U);
  EXPECT_EQ(m.params.at("lstm.Pu").cols, c.F);
  EXPECT_EQ(m.params.at("lstm.Wi").cols, c.U + c.F);
  EXPECT_EQ(m.params.at("mlp.W0").rows, 4);
  EXPECT_EQ(m.params.at("mlp.W0").cols, data::kIndicatorCount);
  EXPECT_EQ(m.params.at("mlp.W1").rows, c.U);
  EXPECT_EQ(m.params.at("fuse.Wf").rows, 2 * c.U);
  EXPECT_EQ(m.params.at("graph.pi").rows, c.U);
  EXPECT_EQ(m.params.at("attn.Pa").cols, c.V);
  EXPECT_EQ(m.params.at("attn.Qa").rows, c.V);
  EXPECT_EQ(m.params.at("attn.Qa").cols, c.U);
  EXPECT_EQ(m.params.at("clf.Q").cols, 3 * c.U);
  EXPECT_EQ(m.params.at("clf.b").cols, 1);
}

TEST(Params, XavierBoundsAndZeroBiases) {
  const auto c = small_cfg();
  model::HgnnModel m(c, 11);
  for (std::size_t i = 0; i < m.params.count(); ++i) {
    const Array& a = m.params.array(i);
    const std::string& name = m.params.name(i);
    if (name.find(".b") != std::string::npos) {
      for (double x : a.v) EXPECT_EQ(x, 0.0) << name;
      continue;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(a.rows + a.cols));
    double max_abs = 0;
    for (double x : a.v) {
      EXPECT_LE(std::abs(x), bound) << name;
      max_abs = std::max(max_abs, std::abs(x));
    }
    EXPECT_GT(max_abs, 0.0) << name << " was never filled";
  }
}

TEST(Params, SeedReproducibility) {
  const auto c = small_cfg();
  model::HgnnModel a(c, 7), b(c, 7), other(c, 8);
  ASSERT_EQ(a.params.count(), b.params.count());
  bool any_diff_other = false;
  for (std::size_t i = 0; i < a.params.count(); ++i) {
    EXPECT_EQ(a.params.array(i).v, b.params.array(i).v) << a.params.name(i);
    if (a.params.array(i).v != other.params.array(i).v) any_diff_other = true;
  }
  EXPECT_TRUE(any_diff_other);
}

TEST(Lstm, ZeroParamsGiveZeroState) {
  model::ParamStore ps;
  model::register_lstm(ps, "lstm", 3, 2);
  Tape t;
  const auto p = ps.lease(t);
  const auto lp = model::pack_lstm(ps, p, "lstm");
  std::vector<Var> steps{t.constant(Array(4, 2, 0.7)), t.constant(Array(4, 2, -0.2))};
  const Var h = model::lstm_encode_steps(t, steps, lp);
  for (double x : t.value(h).v) EXPECT_EQ(x, 0.0);
}

TEST(Lstm, ScalarHandRollout) {
  model::ParamStore ps;
  model::register_lstm(ps, "lstm", 1, 1);
  // i = sigmoid(x), r = o = sigmoid(0) = 1/2, u = tanh(x)
  ps.at("lstm.Wi")(0, 1) = 1.0;
  ps.at("lstm.Pu")(0, 0) = 1.0;

  const auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double x1 = 0.8, x2 = -0.3;
  const double c1 = 0.5 * 0.0 + sig(x1) * std::tanh(x1);
  const double h1 = 0.5 * std::tanh(c1);
  const double c2 = 0.5 * c1 + sig(x2) * std::tanh(x2);
  const double h2 = 0.5 * std::tanh(c2);
  (void)h1;

  Tape t;
  const auto p = ps.lease(t);
  const auto lp = model::pack_lstm(ps, p, "lstm");
  std::vector<Var> steps{t.constant(Array(1, 1, x1)), t.constant(Array(1, 1, x2))};
  const Var h = model::lstm_encode_steps(t, steps, lp);
  EXPECT_NEAR(t.value(h).scalar(), h2, 1e-15);
}

TEST(Lstm, StateStaysInUnitBand) {
  model::ParamStore ps;
  model::register_lstm(ps, "lstm", 4, 3);
  Rng rng(99);
  for (std::size_t i = 0; i < ps.count(); ++i)
    for (double& x : ps.array(i).v) x = rng.uniform(-2.0, 2.0);
  Tape t;
  const auto p = ps.lease(t);
  const auto lp = model::pack_lstm(ps, p, "lstm");
  std::vector<Var> steps;
  for (int s = 0; s < 12; ++s) {
    Array a(5, 3);
    for (double& x : a.v) x = rng.uniform(-3.0, 3.0);
    steps.push_back(t.constant(std::move(a)));
  }
  const Var h = model::lstm_encode_steps(t, steps, lp);
  for (double x : t.value(h).v) {
    EXPECT_GT(x, -1.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(Mlp, ZeroParamsGiveZeroOutput) {
  model::ParamStore ps;
  model::register_mlp(ps, "mlp", 5, {4}, 3);
  Tape t;
  const auto p = ps.lease(t);
  const auto mp = model::pack_mlp(ps, p, "mlp", 2);
  const Var y = model::mlp_forward(t, t.constant(Array(2, 5, 0.9)), mp);
  for (double x : t.value(y).v) EXPECT_EQ(x, 0.0);
}

TEST(Mlp, IdentityLayersPassPositiveInputThrough) {
  model::ParamStore ps;
  model::register_mlp(ps, "mlp", 3, {3}, 3);
  for (int i = 0; i < 3; ++i) {
    ps.at("mlp.W0")(i, i) = 1.0;
    ps.at("mlp.W1")(i, i) = 1.0;
  }
  Tape t;
  const auto p = ps.lease(t);
  const auto mp = model::pack_mlp(ps, p, "mlp", 2);
  Array x(2, 3);
  for (int i = 0; i < 6; ++i) x.v[static_cast<std::size_t>(i)] = 0.1 * (i + 1);
  const Var y = model::mlp_forward(t, t.constant(x), mp);
  EXPECT_EQ(t.value(y).v, x.v);
}

TEST(Model, AllZeroParamsGiveZeroLogits) {
  const auto fx = make_fixture(6, 3, data::kFeatureCount, {1, 4}, {1, 0}, 21);
  model::HgnnModel m(small_cfg(), 5);
  zero_params(m);
  for (double z : logits_of(m, fx.batch, &fx.graph)) EXPECT_EQ(z, 0.0);
}

TEST(Attention, ZeroPaGivesUniformWeightsAndColumnMean) {
  Rng rng(31);
  const int n = 7, U = 4, V = 3;
  Array a(n, U), src(n, U), qa(V, U);
  for (double& x : a.v) x = rng.uniform(-1, 1);
  for (double& x : src.v) x = rng.uniform(-1, 1);
  for (double& x : qa.v) x = rng.uniform(-1, 1);

  Tape t;
  const auto att = model::market_attention(t, t.constant(a), t.constant(src),
                                           t.constant(Array(1, V, 0.0)), t.constant(qa),
                                           t.constant(Array(1, V, 0.0)));
  const Array& w = t.value(att.weights);
  ASSERT_EQ(w.rows, n);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(w(i, 0), 1.0 / n, 1e-15);
  const Array& pooled = t.value(att.pooled);
  for (int j = 0; j < U; ++j) {
    double mean = 0;
    for (int i = 0; i < n; ++i) mean += src(i, j);
    mean /= n;
    EXPECT_NEAR(pooled(0, j), mean, 1e-15);
  }
}

TEST(Attention, SingleNodeGetsFullWeight) {
  Rng rng(32);
  Array a(1, 4), src(1, 4), pa(1, 2), qa(2, 4), ba(1, 2);
  for (double& x : a.v) x = rng.uniform(-1, 1);
  for (double& x : src.v) x = rng.uniform(-1, 1);
  for (double& x : pa.v) x = rng.uniform(-1, 1);
  for (double& x : qa.v) x = rng.uniform(-1, 1);
  Tape t;
  const auto att = model::market_attention(t, t.constant(a), t.constant(src),
                                           t.constant(pa), t.constant(qa), t.constant(ba));
  EXPECT_DOUBLE_EQ(t.value(att.weights).scalar(), 1.0);
  EXPECT_EQ(t.value(att.pooled).v, src.v);
}

TEST(Attention, WeightsSumToOneAndShiftInvariant) {
  Rng rng(33);
  const int n = 9, U = 5, V = 4;
  Array a(n, U), src(n, U), pa(1, V), qa(V, U), ba(1, V);
  for (double& x : a.v) x = rng.uniform(-2, 2);
  for (double& x : src.v) x = rng.uniform(-2, 2);
  for (double& x : pa.v) x = rng.uniform(-2, 2);
  for (double& x : qa.v) x = rng.uniform(-2, 2);
  for (double& x : ba.v) x = rng.uniform(-2, 2);

  Tape t;
  const Var va = t.constant(a), vsrc = t.constant(src);
  const Var vpa = t.constant(pa), vqa = t.constant(qa), vba = t.constant(ba);
  const auto att = model::market_attention(t, va, vsrc, vpa, vqa, vba);

  double sum = 0;
  for (double x : t.value(att.weights).v) sum += x;
  EXPECT_NEAR(sum, 1.0, 1e-12);

  // Rebuild the score path; it must agree exactly, which pins down the
  // formula, and shifting every score by a constant must not move the
  // weights.
  const Var eta = diff::matmul_nt(diff::tanh_op(diff::affine(va, vqa, vba)), vpa);
  const Var w_rebuilt = diff::softmax_vec(eta);
  EXPECT_EQ(t.value(w_rebuilt).v, t.value(att.weights).v);

  const Var shifted = diff::softmax_vec(diff::add(eta, t.constant(Array(n, 1, 0.37))));
  for (int i = 0; i < n; ++i)
    EXPECT_NEAR(t.value(shifted)(i, 0), t.value(att.weights)(i, 0), 1e-12);
}

TEST(GraphConvolve, IdentityPiOnIsolatedAndPairedNodes) {
  // S00 alone in IA; S01, S02 share IB.
  std::map<std::string, std::string> ind{{"S00", "IA"}, {"S01", "IB"}, {"S02", "IB"}};
  const auto g = graph::IndustryGraph::build(ind);
  Array e(3, 2);
  e.v = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  Array pi(2, 2, 0.0);
  pi(0, 0) = pi(1, 1) = 1.0;
  Tape t;
  const Var a = model::graph_convolve(t.constant(e), g, t.constant(pi));
  const Array& av = t.value(a);
  // Isolated node keeps its embedding; the 2-clique averages its members.
  EXPECT_DOUBLE_EQ(av(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(av(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(av(1, 0), 4.0);
  EXPECT_DOUBLE_EQ(av(1, 1), 5.0);
  EXPECT_DOUBLE_EQ(av(2, 0), 4.0);
  EXPECT_DOUBLE_EQ(av(2, 1), 5.0);
}

TEST(Model, PermutationOfStockOrderLeavesLogitsUnchanged) {
  const int n = 8, T = 3, F = data::kFeatureCount;
  Rng rng(41);
  // Abstract universe: per-stock step features, indicators, labels.
  std::vector<Array> feat(n, Array(T, F));
  for (auto& a : feat)
    for (double& x : a.v) x = rng.uniform(-1, 1);
  std::vector<std::array<double, data::kIndicatorCount>> inds(n);
  for (auto& d : inds)
    for (double& x : d) x = rng.uniform(-0.5, 0.5);
  const std::vector<int> ev_stocks{1, 5, 6};
  const std::vector<int> ev_labels{1, 0, 1};

  const auto build = [&](const std::vector<int>& row_of) {
    Fixture fx;
    fx.batch.day = T;
    for (int step = 0; step < T; ++step) {
      Array a(n, F);
      for (int k = 0; k < n; ++k)
        for (int f = 0; f < F; ++f) a(row_of[k], f) = feat[k](step, f);
      fx.batch.steps.push_back(std::move(a));
    }
    fx.batch.has_history.assign(n, 1);
    for (std::size_t i = 0; i < ev_stocks.size(); ++i) {
      data::EventSample ev;
      ev.node_index = row_of[ev_stocks[i]];
      ev.label = ev_labels[i];
      for (int j = 0; j < data::kIndicatorCount; ++j)
        ev.indicators[static_cast<std::size_t>(j)] = inds[ev_stocks[i]][static_cast<std::size_t>(j)];
      fx.batch.events.push_back(ev);
    }
    std::map<std::string, std::string> ind;
    for (int k = 0; k < n; ++k) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "S%02d", row_of[k]);
      ind[buf] = k % 2 == 0 ? "IA" : "IB";
    }
    fx.graph = graph::IndustryGraph::build(ind);
    return fx;
  };

  model::HgnnModel m(small_cfg(), 77);
  std::vector<int> identity(n);
  for (int k = 0; k < n; ++k) identity[k] = k;
  const auto base = build(identity);
  const auto ref = logits_of(m, base.batch, &base.graph);

  std::vector<int> perm = identity;
  Rng prng(42);
  for (int trial = 0; trial < 3; ++trial) {
    for (int k = n - 1; k > 0; --k)
      std::swap(perm[k], perm[static_cast<int>(prng.uniform_int(0, k))]);
    const auto fx = build(perm);
    const auto got = logits_of(m, fx.batch, &fx.graph);
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i)
      EXPECT_NEAR(got[i], ref[i], 1e-10) << "event " << i << " trial " << trial;
  }
}

TEST(Presets, AliasesAndContainment) {
  model::HgnnConfig base;
  const auto m = model::apply_preset(base, "m");
  EXPECT_FALSE(m.view_relation);
  EXPECT_TRUE(m.view_market);
  EXPECT_EQ(m.views_name(), "node_market");

  const auto i = model::apply_preset(base, "i");
  EXPECT_TRUE(i.view_relation);
  EXPECT_TRUE(i.view_market);
  EXPECT_EQ(i.views_name(), "node_relation_market");

  const auto node = model::apply_preset(base, "node");
  EXPECT_FALSE(node.needs_graph());
  EXPECT_EQ(node.n_views(), 1);

  EXPECT_THROW(model::apply_preset(base, "market_only"), ConfigError);
  EXPECT_THROW(model::make_model("transformer", base, 1), ConfigError);
}

TEST(Presets, NodeOnlyIgnoresGraphEntirely) {
  const auto fx = make_fixture(6, 3, data::kFeatureCount, {0, 3}, {1, 0}, 51);
  const auto cfg = model::apply_preset(small_cfg(), "node");
  model::HgnnModel m(cfg, 13);
  EXPECT_EQ(logits_of(m, fx.batch, &fx.graph), logits_of(m, fx.batch, nullptr));
}

TEST(Presets, ParamSetsNestByView)
{
  const auto c = small_cfg();
  const auto has = [](const model::HgnnModel& m, const char* name) {
    for (std::size_t i = 0; i < m.params.count(); ++i)
      if (m.params.name(i) == name) return true;
    return false;
  };
  model::HgnnModel node(model::apply_preset(c, "node"), 1);
  EXPECT_FALSE(has(node, "graph.pi"));
  EXPECT_FALSE(has(node, "attn.Pa"));
  EXPECT_EQ(node.params.at("clf.Q").cols, c.U);

  model::HgnnModel nr(model::apply_preset(c, "node_relation"), 1);
  EXPECT_TRUE(has(nr, "graph.pi"));
  EXPECT_FALSE(has(nr, "attn.Pa"));
  EXPECT_EQ(nr.params.at("clf.Q").cols, 2 * c.U);

  model::HgnnModel full(model::apply_preset(c, "full"), 1);
  EXPECT_TRUE(has(full, "graph.pi"));
  EXPECT_TRUE(has(full, "attn.Pa"));
  EXPECT_EQ(full.params.at("clf.Q").cols, 3 * c.U);
}

TEST(Baselines, LstmEqualsNodeOnlyHgnnWithoutCurbFeatures) {
  const auto fx = make_fixture(5, 4, data::kFeatureCount, {2, 4}, {1, 1}, 61);
  auto cfg = model::apply_preset(small_cfg(), "node");
  cfg.T = 4;
  cfg.use_curb_features = false;
  model::HgnnModel hg(cfg, 19);
  model::LstmModel lstm(cfg, 19);
  ASSERT_EQ(hg.params.count(), lstm.params.count());
  EXPECT_EQ(logits_of(hg, fx.batch, nullptr), logits_of(lstm, fx.batch, nullptr));
}

TEST(Model, MarketAggregandChoiceChangesOutput) {
  const auto fx = make_fixture(6, 3, data::kFeatureCount, {1, 4}, {1, 0}, 71);
  auto rel = small_cfg();
  rel.market_aggregand = model::HgnnConfig::Aggregand::relation;
  auto node = small_cfg();
  node.market_aggregand = model::HgnnConfig::Aggregand::node;
  model::HgnnModel a(rel, 3), b(node, 3);
  const auto za = logits_of(a, fx.batch, &fx.graph);
  const auto zb = logits_of(b, fx.batch, &fx.graph);
  double max_diff = 0;
  for (std::size_t i = 0; i < za.size(); ++i)
    max_diff = std::max(max_diff, std::abs(za[i] - zb[i]));
  EXPECT_GT(max_diff, 1e-12);
}

TEST(Baselines, LogregSeparatesGaussianBlobs) {
  // Two blobs two sigma apart on a 2-feature, single-step dataset.
  const int n_days = 40, per_day = 5;
  Rng rng(81);
  data::Dataset ds;
  ds.T = 1;
  for (int s = 0; s < per_day; ++s) ds.stock_ids.push_back("S" + std::to_string(s));
  for (int d = 0; d < n_days; ++d) {
    data::DayBatch b;
    b.day = d + 1;
    Array step(per_day, 2);
    b.has_history.assign(per_day, 1);
    for (int s = 0; s < per_day; ++s) {
      const int label = (d * per_day + s) % 2;
      const double mu = label ? 1.0 : -1.0;
      step(s, 0) = mu + 0.5 * rng.normal();
      step(s, 1) = mu + 0.5 * rng.normal();
      data::EventSample ev;
      ev.node_index = s;
      ev.label = label;
      b.events.push_back(ev);
    }
    b.steps.push_back(std::move(step));
    ds.days.push_back(std::move(b));
  }

  model::HgnnConfig cfg;
  cfg.T = 1;
  cfg.F = 2;
  model::LogRegModel m(cfg, 5);
  train::TrainConfig tc;
  tc.epochs = 60;
  tc.patience = 60;
  train::train_model(m, ds, ds, nullptr, tc);
  const auto res = train::evaluate(m, ds, nullptr);
  EXPECT_GE(res.conf.accuracy(), 0.99);
}
