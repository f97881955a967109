#pragma once

// Loss, Adam, metrics, the day-batched training loop with early stopping,
// and the multi-seed experiment grid.

#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "hgnn/baselines.hpp"
#include "hgnn/data.hpp"
#include "hgnn/diff.hpp"
#include "hgnn/graph.hpp"
#include "hgnn/model.hpp"

namespace hgnn::train {

// Stable binary cross-entropy with logits, averaged over the batch:
// per sample max(z,0) - z*y + log(1 + exp(-|z|)).
inline double bce_term(double z, int y) {
  return std::max(z, 0.0) - z * static_cast<double>(y) + std::log1p(std::exp(-std::abs(z)));
}

inline diff::Var bce_with_logits(const diff::Var& logits, std::vector<int> labels) {
  diff::Tape& t = *logits.tape;
  const Array& z = t.value(logits);
  if (z.cols != 1 || z.rows != static_cast<int>(labels.size()))
    throw ShapeError("bce_with_logits: logits must be " + std::to_string(labels.size()) +
                     "x1, got " + z.shape_str());
  for (int y : labels)
    if (y != 0 && y != 1) throw ContractError("bce_with_logits: label must be 0 or 1");
  double sum = 0;
  for (int i = 0; i < z.rows; ++i) sum += bce_term(z(i, 0), labels[i]);
  const double inv_k = 1.0 / static_cast<double>(z.rows);
  Array out(1, 1, sum * inv_k);
  const int zid = logits.id;
  return t.emit(std::move(out), [zid, labels = std::move(labels), inv_k](diff::Tape& t, int self) {
    const double g = t.grad_at(self)(0, 0);
    const Array& z = t.value_at(zid);
    Array& gz = t.grad_at(zid);
    for (int i = 0; i < z.rows; ++i) {
      const double sig = 1.0 / (1.0 + std::exp(-z(i, 0)));
      gz(i, 0) += g * (sig - static_cast<double>(labels[i])) * inv_k;
    }
  });
}

// ---- metrics ----

struct Confusion {
  long tp = 0, fp = 0, fn = 0, tn = 0;

  long total() const { return tp + fp + fn + tn; }
  double accuracy() const {
    return total() ? static_cast<double>(tp + tn) / static_cast<double>(total()) : 0.0;
  }
  double precision() const {
    return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  }
  double recall() const {
    return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  }
  // Positive class is label 1 (sealed); defined as 0 when both precision
  // and recall are 0.
  double f1() const {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }

  void count(int label, int pred) {
    if (label == 1)
      pred == 1 ? ++tp : ++fn;
    else
      pred == 1 ? ++fp : ++tn;
  }
};

inline Confusion confusion_from(const std::vector<int>& labels, const std::vector<int>& preds) {
  if (labels.size() != preds.size())
    throw ContractError("confusion_from: size mismatch");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) c.count(labels[i], preds[i]);
  return c;
}

// ---- optimizer ----

struct AdamConfig {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip = 5.0;  // global gradient norm; <= 0 disables clipping
};

struct AdamState {
  std::vector<Array> m, v;
  long step = 0;

  explicit AdamState(const model::ParamStore& ps) {
    for (std::size_t i = 0; i < ps.count(); ++i) {
      m.emplace_back(ps.array(i).rows, ps.array(i).cols, 0.0);
      v.emplace_back(ps.array(i).rows, ps.array(i).cols, 0.0);
    }
  }
};

inline double global_grad_norm(const std::vector<Array>& grads) {
  double sq = 0;
  for (const Array& g : grads)
    for (double x : g.v) sq += x * x;
  return std::sqrt(sq);
}

inline void adam_step(model::ParamStore& ps, std::vector<Array>& grads, AdamState& st,
                      const AdamConfig& cfg) {
  if (grads.size() != ps.count() || st.m.size() != ps.count())
    throw ContractError("adam_step: state/grads do not match parameter store");
  if (cfg.clip > 0) {
    const double norm = global_grad_norm(grads);
    if (norm > cfg.clip) {
      const double scale = cfg.clip / norm;
      for (Array& g : grads)
        for (double& x : g.v) x *= scale;
    }
  }
  st.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Array& p = ps.array(i);
    const Array& g = grads[i];
    Array& m = st.m[i];
    Array& v = st.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m.v[j] = cfg.beta1 * m.v[j] + (1.0 - cfg.beta1) * g.v[j];
      v.v[j] = cfg.beta2 * v.v[j] + (1.0 - cfg.beta2) * g.v[j] * g.v[j];
      const double mhat = m.v[j] / bc1;
      const double vhat = v.v[j] / bc2;
      p.v[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

// ---- evaluation ----

struct EvalResult {
  Confusion conf;
  double loss = 0;  // event-weighted mean BCE
};

inline EvalResult evaluate(const model::ModelBase& m, const data::Dataset& ds,
                           const graph::IndustryGraph* g) {
  if (ds.days.empty()) throw ContractError("evaluate: empty split");
  EvalResult res;
  double loss_sum = 0;
  long n_events = 0;
  for (const auto& batch : ds.days) {
    diff::Tape t;
    const diff::Var logits = m.forward_owned(t, batch, g);
    const Array& z = t.value(logits);
    for (std::size_t i = 0; i < batch.events.size(); ++i) {
      const int pred = z(static_cast<int>(i), 0) >= 0.0 ? 1 : 0;
      res.conf.count(batch.events[i].label, pred);
      loss_sum += bce_term(z(static_cast<int>(i), 0), batch.events[i].label);
    }
    n_events += static_cast<long>(batch.events.size());
  }
  res.loss = loss_sum / static_cast<double>(n_events);
  return res;
}

// ---- training loop ----

struct TrainConfig {
  AdamConfig adam;
  int epochs = 20;
  int patience = 5;  // epochs without a new best validation F1
};

struct EpochPoint {
  int epoch = 0;
  double train_loss = 0, val_loss = 0, val_f1 = 0, val_acc = 0;
};

struct TrainOutcome {
  int best_epoch = 0;
  int epochs_ran = 0;
  double best_val_f1 = 0;
  Confusion best_val_conf;
  std::vector<EpochPoint> curve;
};

// Iterates days chronologically within each epoch, one Adam step per day
// batch, early-stops on validation F1, and leaves the model holding the
// best-validation parameters.
inline TrainOutcome train_model(model::ModelBase& m, const data::Dataset& train_ds,
                                const data::Dataset& val_ds, const graph::IndustryGraph* g,
                                const TrainConfig& tc) {
  if (tc.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (tc.adam.lr <= 0) throw ConfigError("train: learning rate must be positive");
  if (train_ds.days.empty() || val_ds.days.empty())
    throw ContractError("train: empty train or val split");

  AdamState adam(m.params);
  TrainOutcome out;
  model::ParamStore best = m.params;
  int since_best = 0;

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    double loss_sum = 0;
    long n_events = 0;
    for (const auto& batch : train_ds.days) {
      diff::Tape t;
      const auto leased = m.params.lease(t);
      std::vector<int> labels;
      labels.reserve(batch.events.size());
      for (const auto& ev : batch.events) labels.push_back(ev.label);
      const diff::Var logits = m.forward(t, leased, batch, g);
      const diff::Var loss = bce_with_logits(logits, labels);
      const double loss_val = t.value(loss).scalar();
      if (!std::isfinite(loss_val))
        throw TrainError("training diverged: loss is not finite at epoch " +
                         std::to_string(epoch) + ", day " + std::to_string(batch.day) +
                         " (" + m.kind + ")");
      loss_sum += loss_val * static_cast<double>(batch.events.size());
      n_events += static_cast<long>(batch.events.size());
      t.backward(loss);
      std::vector<Array> grads;
      grads.reserve(leased.size());
      for (const auto& v : leased) grads.push_back(t.grad(v));
      adam_step(m.params, grads, adam, tc.adam);
    }

    const EvalResult val = evaluate(m, val_ds, g);
    EpochPoint pt;
    pt.epoch = epoch;
    pt.train_loss = loss_sum / static_cast<double>(n_events);
    pt.val_loss = val.loss;
    pt.val_f1 = val.conf.f1();
    pt.val_acc = val.conf.accuracy();
    out.curve.push_back(pt);
    out.epochs_ran = epoch;

    if (epoch == 1 || pt.val_f1 > out.best_val_f1) {
      out.best_val_f1 = pt.val_f1;
      out.best_epoch = epoch;
      out.best_val_conf = val.conf;
      best = m.params;
      since_best = 0;
    } else if (++since_best >= tc.patience) {
      break;
    }
  }
  m.params = std::move(best);
  return out;
}

// ---- multi-seed experiment grid ----

struct GridRow {
  std::string kind;    // hgnn | logreg | lstm | gcn
  std::string preset;  // view preset for hgnn rows, "-" otherwise
};

inline std::vector<GridRow> default_grid() {
  return {{"hgnn", "node"}, {"hgnn", "node_relation"}, {"hgnn", "full"},
          {"logreg", "-"},  {"lstm", "-"},             {"gcn", "-"}};
}

struct RunRecord {
  std::string kind, preset;
  std::uint64_t seed = 0;
  Confusion test_conf;
  double test_acc = 0, test_f1 = 0;
  int epochs_ran = 0, best_epoch = 0;
  std::size_t param_count = 0;
  double wall_seconds = 0;
  std::vector<EpochPoint> curve;
  model::ParamStore final_params;
  model::HgnnConfig model_cfg;
};

inline std::string row_label(const GridRow& r) {
  return r.kind == "hgnn" ? r.kind + "_" + r.preset : r.kind;
}

inline RunRecord run_single(const GridRow& row, const model::HgnnConfig& base_cfg,
                            const data::SplitDatasets& splits,
                            const graph::IndustryGraph& g, const TrainConfig& tc,
                            std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  model::HgnnConfig cfg = base_cfg;
  if (row.kind == "hgnn") cfg = model::apply_preset(base_cfg, row.preset);
  auto m = model::make_model(row.kind, cfg, seed);
  const graph::IndustryGraph* gp = m->needs_graph() ? &g : nullptr;

  RunRecord rec;
  rec.kind = row.kind;
  rec.preset = m->preset;
  rec.seed = seed;
  rec.param_count = m->params.scalar_count();
  rec.model_cfg = cfg;

  const TrainOutcome outcome = train_model(*m, splits.train, splits.val, gp, tc);
  const EvalResult test = evaluate(*m, splits.test, gp);
  rec.test_conf = test.conf;
  rec.test_acc = test.conf.accuracy();
  rec.test_f1 = test.conf.f1();
  rec.epochs_ran = outcome.epochs_ran;
  rec.best_epoch = outcome.best_epoch;
  rec.curve = outcome.curve;
  rec.final_params = std::move(m->params);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

// Runs the (row x seed) grid, optionally fanning runs across threads. Each
// run is isolated, so the result is identical for any worker count.
inline std::vector<RunRecord> multi_seed_experiment(
    const std::vector<GridRow>& rows, const std::vector<std::uint64_t>& seeds,
    const model::HgnnConfig& base_cfg, const data::SplitDatasets& splits,
    const graph::IndustryGraph& g, const TrainConfig& tc, int workers = 1) {
  if (rows.empty() || seeds.empty())
    throw ConfigError("experiment grid needs at least one row and one seed");
  struct Task {
    std::size_t row, seed;
  };
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t s = 0; s < seeds.size(); ++s) tasks.push_back({r, s});
  std::vector<RunRecord> records(tasks.size());

  const auto run_task = [&](std::size_t i) {
    records[i] = run_single(rows[tasks[i].row], base_cfg, splits, g, tc,
                            seeds[tasks[i].seed]);
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int nw = std::min<std::size_t>(workers, tasks.size());
    pool.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w)
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          run_task(i);
        }
      });
    for (auto& th : pool) th.join();
  }
  return records;
}

struct AggregateRow {
  std::string kind, preset;
  double acc_mean = 0, acc_std = 0, f1_mean = 0, f1_std = 0;
  int n_seeds = 0;
};

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) {
    sd = 0;  // sample std undefined for one observation
    return;
  }
  double sq = 0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  sd = std::sqrt(sq / static_cast<double>(xs.size() - 1));
}

inline std::vector<AggregateRow> aggregate(const std::vector<GridRow>& rows,
                                           const std::vector<RunRecord>& records) {
  std::vector<AggregateRow> out;
  for (const auto& row : rows) {
    std::vector<double> accs, f1s;
    AggregateRow agg;
    agg.kind = row.kind;
    for (const auto& rec : records) {
      if (rec.kind != row.kind) continue;
      if (row.kind == "hgnn") {
        const auto preset_name = model::apply_preset(model::HgnnConfig{}, row.preset).views_name();
        if (rec.preset != preset_name) continue;
      }
      agg.preset = rec.preset;
      accs.push_back(rec.test_acc);
      f1s.push_back(rec.test_f1);
    }
    if (accs.empty()) continue;
    agg.n_seeds = static_cast<int>(accs.size());
    mean_std(accs, agg.acc_mean, agg.acc_std);
    mean_std(f1s, agg.f1_mean, agg.f1_std);
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace hgnn::train
