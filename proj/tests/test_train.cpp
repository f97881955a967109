#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "hgnn/baselines.hpp"
#include "hgnn/rng.hpp"
#include "hgnn/train.hpp"

using namespace hgnn;
using diff::Tape;
using diff::Var;

namespace {

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Single-step dataset of two separable Gaussian blobs: per-event label
// alternates, the two features sit at +-1 with sigma 0.5.
data::Dataset blob_dataset(int n_days, int per_day, std::uint64_t seed) {
  Rng rng(mix_seed(seed, "blobs"));
  data::Dataset ds;
  ds.T = 1;
  for (int s = 0; s < per_day; ++s) ds.stock_ids.push_back("S" + std::to_string(s));
  for (const auto& sid : ds.stock_ids) ds.industry_of[sid] = "IA";
  for (int d = 0; d < n_days; ++d) {
    data::DayBatch b;
    b.day = d + 1;
    Array step(per_day, 2);
    b.has_history.assign(static_cast<std::size_t>(per_day), 1);
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
  return ds;
}

data::SplitDatasets blob_splits(std::uint64_t seed) {
  data::SplitDatasets sp;
  sp.train = blob_dataset(24, 5, seed);
  sp.val = blob_dataset(8, 5, seed + 100);
  sp.test = blob_dataset(8, 5, seed + 200);
  return sp;
}

model::HgnnConfig blob_cfg() {
  model::HgnnConfig cfg;
  cfg.T = 1;
  cfg.F = 2;
  cfg.U = 4;
  cfg.V = 3;
  cfg.mlp_hidden_dims = {3};
  return cfg;
}

bool params_equal(const model::ParamStore& a, const model::ParamStore& b) {
  if (a.count() != b.count()) return false;
  for (std::size_t i = 0; i < a.count(); ++i)
    if (a.array(i).v != b.array(i).v) return false;
  return true;
}

}  // namespace

TEST(Bce, KnownValuesAndStability) {
  EXPECT_DOUBLE_EQ(train::bce_term(0.0, 0), std::numbers::ln2);
  EXPECT_DOUBLE_EQ(train::bce_term(0.0, 1), std::numbers::ln2);

  // Confident and correct: loss collapses without overflow.
  EXPECT_LE(train::bce_term(50.0, 1), 1e-20);
  EXPECT_LE(train::bce_term(-50.0, 0), 1e-20);
  EXPECT_TRUE(std::isfinite(train::bce_term(800.0, 0)));
  EXPECT_TRUE(std::isfinite(train::bce_term(-800.0, 1)));

  // Moderate logits match the naive cross-entropy.
  for (double z : {-1.3, -0.2, 0.7, 2.1}) {
    EXPECT_NEAR(train::bce_term(z, 1), -std::log(sig(z)), 1e-14);
    EXPECT_NEAR(train::bce_term(z, 0), -std::log(1.0 - sig(z)), 1e-14);
  }
}

TEST(Bce, BatchMeanAndGradient) {
  const std::vector<double> zs{0.5, -0.2, 1.1};
  const std::vector<int> ys{1, 0, 1};
  Tape t;
  Array za(3, 1);
  za.v = zs;
  const Var logits = t.leaf(za);
  const Var loss = train::bce_with_logits(logits, ys);

  double sum = 0;
  for (int i = 0; i < 3; ++i) sum += train::bce_term(zs[i], ys[i]);
  EXPECT_DOUBLE_EQ(t.value(loss).scalar(), sum * (1.0 / 3.0));

  t.backward(loss);
  const Array& g = t.grad(logits);
  for (int i = 0; i < 3; ++i)
    EXPECT_NEAR(g(i, 0), (sig(zs[i]) - ys[i]) / 3.0, 1e-12);
}

TEST(Bce, RejectsBadShapes) {
  Tape t;
  const Var two_cols = t.leaf(Array(3, 2, 0.1));
  EXPECT_THROW(train::bce_with_logits(two_cols, {1, 0, 1}), ShapeError);
  const Var ok = t.leaf(Array(3, 1, 0.1));
  EXPECT_THROW(train::bce_with_logits(ok, {1, 0}), ShapeError);
  EXPECT_THROW(train::bce_with_logits(ok, {1, 0, 2}), ContractError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  model::ParamStore ps;
  ps.add("p", 1, 1);
  train::AdamState st(ps);
  train::AdamConfig cfg;
  std::vector<Array> grads{Array(1, 1, 0.3)};
  train::adam_step(ps, grads, st, cfg);
  // mhat = g and vhat = g*g exactly on step one, so the step is
  // lr * g / (|g| + eps), i.e. the signed learning rate up to eps.
  EXPECT_NEAR(ps.at("p").scalar(), -cfg.lr, cfg.lr * 1e-7);

  model::ParamStore neg;
  neg.add("p", 1, 1);
  train::AdamState st2(neg);
  std::vector<Array> g2{Array(1, 1, -4.0)};
  train::adam_step(neg, g2, st2, cfg);
  EXPECT_NEAR(neg.at("p").scalar(), cfg.lr, cfg.lr * 1e-7);
}

TEST(Adam, ZeroGradLeavesParamsAlone) {
  model::ParamStore ps;
  ps.add("p", 2, 2);
  ps.at("p")(0, 0) = 1.5;
  train::AdamState st(ps);
  train::AdamConfig cfg;
  std::vector<Array> grads{Array(2, 2, 0.0)};
  for (int i = 0; i < 3; ++i) train::adam_step(ps, grads, st, cfg);
  EXPECT_EQ(ps.at("p")(0, 0), 1.5);
  EXPECT_EQ(ps.at("p")(1, 1), 0.0);
}

TEST(Adam, ConvergesOnQuadratic) {
  model::ParamStore ps;
  ps.add("p", 1, 1);
  ps.at("p")(0, 0) = -7.0;
  train::AdamState st(ps);
  train::AdamConfig cfg;
  cfg.lr = 0.1;
  for (int i = 0; i < 200; ++i) {
    std::vector<Array> grads{Array(1, 1, 2.0 * (ps.at("p").scalar() - 3.0))};
    train::adam_step(ps, grads, st, cfg);
  }
  EXPECT_NEAR(ps.at("p").scalar(), 3.0, 0.1);
}

TEST(Adam, ClipRescalesToGlobalNorm) {
  // Clipping [30, 40] (norm 50) to 5 must match feeding [3, 4] unclipped.
  model::ParamStore a, b;
  a.add("p", 1, 2);
  b.add("p", 1, 2);
  train::AdamState sa(a), sb(b);
  train::AdamConfig ca, cb;
  ca.clip = 5.0;
  cb.clip = 0.0;

  Array big(1, 2);
  big.v = {30.0, 40.0};
  Array small(1, 2);
  small.v = {3.0, 4.0};
  std::vector<Array> ga{big}, gb{small};
  EXPECT_DOUBLE_EQ(train::global_grad_norm(ga), 50.0);
  train::adam_step(a, ga, sa, ca);
  train::adam_step(b, gb, sb, cb);
  EXPECT_EQ(a.at("p").v, b.at("p").v);

  // Below the threshold nothing is scaled.
  model::ParamStore c, d;
  c.add("p", 1, 2);
  d.add("p", 1, 2);
  train::AdamState sc(c), sd(d);
  std::vector<Array> gc{small}, gd{small};
  train::adam_step(c, gc, sc, ca);
  train::adam_step(d, gd, sd, cb);
  EXPECT_EQ(c.at("p").v, d.at("p").v);
}

TEST(Metrics, HandCase) {
  const std::vector<int> labels{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  const std::vector<int> preds{1, 1, 0, 1, 0, 0, 0, 0, 0, 0};
  const auto c = train::confusion_from(labels, preds);
  EXPECT_EQ(c.tp, 2);
  EXPECT_EQ(c.fp, 1);
  EXPECT_EQ(c.fn, 1);
  EXPECT_EQ(c.tn, 6);
  EXPECT_DOUBLE_EQ(c.accuracy(), 0.8);
  EXPECT_DOUBLE_EQ(c.precision(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.recall(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.f1(), 2.0 / 3.0);
}

TEST(Metrics, EdgeCases) {
  train::Confusion perfect;
  perfect.tp = 4;
  perfect.tn = 6;
  EXPECT_DOUBLE_EQ(perfect.accuracy(), 1.0);
  EXPECT_DOUBLE_EQ(perfect.f1(), 1.0);

  // No positive predictions and no positive labels: F1 defined as 0.
  train::Confusion all_neg;
  all_neg.tn = 10;
  EXPECT_DOUBLE_EQ(all_neg.f1(), 0.0);
  EXPECT_DOUBLE_EQ(all_neg.accuracy(), 1.0);

  train::Confusion never_right;
  never_right.fp = 3;
  never_right.fn = 2;
  EXPECT_DOUBLE_EQ(never_right.f1(), 0.0);
  EXPECT_DOUBLE_EQ(never_right.accuracy(), 0.0);

  EXPECT_THROW(train::confusion_from({1, 0}, {1}), ContractError);
}

TEST(Metrics, RandomSetsMatchBruteRecount) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 40));
    std::vector<int> labels(static_cast<std::size_t>(n)), preds(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.4) ? 1 : 0;
      preds[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
    }
    const auto c = train::confusion_from(labels, preds);
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (int i = 0; i < n; ++i) {
      const int y = labels[static_cast<std::size_t>(i)], p = preds[static_cast<std::size_t>(i)];
      tp += y == 1 && p == 1;
      fp += y == 0 && p == 1;
      fn += y == 1 && p == 0;
      tn += y == 0 && p == 0;
    }
    ASSERT_EQ(c.tp, tp);
    ASSERT_EQ(c.fp, fp);
    ASSERT_EQ(c.fn, fn);
    ASSERT_EQ(c.tn, tn);
    ASSERT_EQ(c.total(), n);

    // Order of (label, pred) pairs must not matter.
    std::vector<int> labels2 = labels, preds2 = preds;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_int(0, i));
      std::swap(labels2[static_cast<std::size_t>(i)], labels2[static_cast<std::size_t>(j)]);
      std::swap(preds2[static_cast<std::size_t>(i)], preds2[static_cast<std::size_t>(j)]);
    }
    const auto c2 = train::confusion_from(labels2, preds2);
    ASSERT_EQ(c2.tp, c.tp);
    ASSERT_EQ(c2.tn, c.tn);
  }
}

TEST(Metrics, MeanStdSmallSamples) {
  double mean = 0, sd = 0;
  train::mean_std({0.6, 0.7}, mean, sd);
  EXPECT_DOUBLE_EQ(mean, 0.65);
  EXPECT_NEAR(sd, std::sqrt(0.005), 1e-15);

  train::mean_std({0.42}, mean, sd);
  EXPECT_DOUBLE_EQ(mean, 0.42);
  EXPECT_EQ(sd, 0.0);
}

TEST(Training, LossDropsWithinThreeEpochs) {
  const auto sp = blob_splits(3);
  const auto g = graph::IndustryGraph::build(sp.train.industry_of);
  model::HgnnModel m(blob_cfg(), 9);
  const double before = train::evaluate(m, sp.val, &g).loss;
  train::TrainConfig tc;
  tc.epochs = 3;
  tc.patience = 3;
  const auto out = train::train_model(m, sp.train, sp.val, &g, tc);
  EXPECT_LT(out.curve.back().val_loss, before);
  EXPECT_EQ(out.epochs_ran, 3);
  EXPECT_EQ(static_cast<int>(out.curve.size()), 3);
}

TEST(Training, EarlyStopRestoresBestParams) {
  const auto sp = blob_splits(5);
  const auto g = graph::IndustryGraph::build(sp.train.industry_of);
  model::HgnnModel m(blob_cfg(), 11);
  train::TrainConfig tc;
  tc.epochs = 12;
  tc.patience = 2;
  const auto out = train::train_model(m, sp.train, sp.val, &g, tc);
  ASSERT_GE(out.best_epoch, 1);
  EXPECT_LE(out.best_epoch, out.epochs_ran);
  // The restored parameters reproduce the reported best validation F1.
  const auto val = train::evaluate(m, sp.val, &g);
  EXPECT_DOUBLE_EQ(val.conf.f1(), out.best_val_f1);
}

TEST(Training, RunSingleIsDeterministic) {
  const auto sp = blob_splits(7);
  const auto g = graph::IndustryGraph::build(sp.train.industry_of);
  train::TrainConfig tc;
  tc.epochs = 4;
  tc.patience = 4;
  const train::GridRow row{"hgnn", "full"};
  const auto a = train::run_single(row, blob_cfg(), sp, g, tc, 21);
  const auto b = train::run_single(row, blob_cfg(), sp, g, tc, 21);
  EXPECT_EQ(a.test_acc, b.test_acc);
  EXPECT_EQ(a.test_f1, b.test_f1);
  EXPECT_EQ(a.best_epoch, b.best_epoch);
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    EXPECT_EQ(a.curve[i].train_loss, b.curve[i].train_loss);
    EXPECT_EQ(a.curve[i].val_f1, b.curve[i].val_f1);
  }
  EXPECT_TRUE(params_equal(a.final_params, b.final_params));
}

TEST(Training, WorkerCountDoesNotChangeResults) {
  const auto sp = blob_splits(9);
  const auto g = graph::IndustryGraph::build(sp.train.industry_of);
  train::TrainConfig tc;
  tc.epochs = 2;
  tc.patience = 2;
  const std::vector<train::GridRow> rows{{"hgnn", "node"}, {"logreg", "-"}, {"lstm", "-"}};
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto serial = train::multi_seed_experiment(rows, seeds, blob_cfg(), sp, g, tc, 1);
  const auto parallel = train::multi_seed_experiment(rows, seeds, blob_cfg(), sp, g, tc, 4);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].kind, parallel[i].kind);
    EXPECT_EQ(serial[i].seed, parallel[i].seed);
    EXPECT_EQ(serial[i].test_acc, parallel[i].test_acc);
    EXPECT_EQ(serial[i].test_f1, parallel[i].test_f1);
    EXPECT_TRUE(params_equal(serial[i].final_params, parallel[i].final_params));
  }
}

TEST(Training, NonFiniteLossRaisesTrainError) {
  auto ds = blob_dataset(4, 3, 13);
  ds.days[0].steps[0](0, 0) = std::numeric_limits<double>::infinity();
  ds.days[0].steps[0](0, 1) = std::numeric_limits<double>::infinity();
  model::HgnnConfig cfg;
  cfg.T = 1;
  cfg.F = 2;
  model::LogRegModel m(cfg, 5);
  train::TrainConfig tc;
  tc.epochs = 2;
  EXPECT_THROW(train::train_model(m, ds, ds, nullptr, tc), TrainError);
}
