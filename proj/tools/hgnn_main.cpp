// hgnn: generate synthetic corpora, train/evaluate/ablate curb-stock
// models, gradient-check the autodiff core, and emit report tables.
//
// Seed precedence everywhere: --seed flag > HGNN_SEED env var > config file.
// All file outputs are written atomically (temp + rename).

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hgnn/checkpoint.hpp"
#include "hgnn/config.hpp"
#include "hgnn/data.hpp"
#include "hgnn/errors.hpp"
#include "hgnn/gradsuite.hpp"
#include "hgnn/graph.hpp"
#include "hgnn/io.hpp"
#include "hgnn/report.hpp"
#include "hgnn/synthetic.hpp"
#include "hgnn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hgnn;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("HGNN_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (errno != 0 || end == s || *end != '\0')
    throw ConfigError(std::string("HGNN_SEED must be an unsigned integer, got '") + s + "'");
  return static_cast<std::uint64_t>(v);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t config_value) {
  if (flag) return *flag;
  if (const auto e = env_seed()) return *e;
  return config_value;
}

config::ExperimentConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return config::ExperimentConfig{};
  return config::load(path);
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw DataError("missing required file: " + p.string());
}

struct LoadedData {
  std::vector<data::DailyBar> daily;
  std::vector<data::MinuteBar> minute;
  std::map<std::string, std::string> industry_of;
};

// Existence of all three tables is checked up front, so a missing file
// fails before any loading or training starts.
LoadedData load_data_dir(const fs::path& dir) {
  const fs::path daily = dir / "daily.csv";
  const fs::path minute = dir / "minute.csv";
  const fs::path industry = dir / "industry.csv";
  require_file(daily);
  require_file(minute);
  require_file(industry);
  LoadedData d;
  d.daily = data::load_daily_csv(daily.string());
  d.minute = data::load_minute_csv(minute.string());
  d.industry_of = data::load_industry_csv(industry.string());
  return d;
}

struct AssembledData {
  data::SplitDatasets splits;
  graph::IndustryGraph graph;
};

AssembledData assemble(const LoadedData& d, const config::ExperimentConfig& cfg) {
  AssembledData a;
  a.splits = data::assemble_dataset(d.daily, d.minute, d.industry_of, cfg.model.T,
                                    cfg.gen.limit_rate, cfg.gen.tick, cfg.ma_window,
                                    cfg.train_frac, cfg.val_frac);
  a.graph = graph::IndustryGraph::build(a.splits.train.industry_of);
  return a;
}

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---- generate ----

int cmd_generate(const std::string& config_path, const std::string& out_dir,
                 const std::optional<std::uint64_t>& seed_flag) {
  config::ExperimentConfig cfg = load_config_or_default(config_path);
  cfg.gen.seed = resolve_seed(seed_flag, cfg.gen.seed);
  cfg.gen.validate();

  const synth::GenOutput out = synth::generate(cfg.gen);
  const fs::path dir(out_dir);

  io::atomic_write(dir / "daily.csv", synth::daily_csv(out.daily, cfg.gen.tick));
  io::atomic_write(dir / "minute.csv", synth::minute_csv(out.minute, cfg.gen.tick));
  io::atomic_write(dir / "industry.csv", synth::industry_csv(out.industry_of));

  json manifest;
  manifest["seed"] = cfg.gen.seed;
  manifest["config_hash"] = [&] {
    const std::uint64_t h = fnv1a64(config::to_json(cfg)["generator"].dump());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
  }();
  manifest["rows"] = {{"daily", out.daily.size()},
                      {"minute", out.minute.size()},
                      {"industry", out.industry_of.size()}};
  manifest["curb_events"] = out.summary.touch_events;
  manifest["sealed_events"] = out.summary.sealed_events;
  manifest["label_balance"] = out.summary.seal_rate();
  manifest["event_rate"] = out.summary.event_rate();
  io::atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");

  std::printf("generated %d stocks x %d days into %s\n", cfg.gen.n_stocks, cfg.gen.n_days,
              dir.string().c_str());
  std::printf("seed=%llu curb_events=%ld label_balance=%s event_rate=%s\n",
              static_cast<unsigned long long>(cfg.gen.seed), out.summary.touch_events,
              g17(out.summary.seal_rate()).c_str(), g17(out.summary.event_rate()).c_str());
  return 0;
}

// ---- train ----

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, std::string model_kind, std::string preset,
              const std::optional<std::uint64_t>& seed_flag) {
  config::ExperimentConfig cfg = load_config_or_default(config_path);
  const std::uint64_t seed = resolve_seed(seed_flag, cfg.seeds.front());
  if (preset.empty()) preset = model_kind == "hgnn" ? "full" : "-";

  const LoadedData d = load_data_dir(data_dir);
  const AssembledData a = assemble(d, cfg);

  const train::GridRow row{model_kind, preset};
  std::printf("training %s (seed %llu) on %zu/%zu/%zu train/val/test days\n",
              train::row_label(row).c_str(), static_cast<unsigned long long>(seed),
              a.splits.train.days.size(), a.splits.val.days.size(),
              a.splits.test.days.size());

  const train::RunRecord rec =
      train::run_single(row, cfg.model, a.splits, a.graph, cfg.train, seed);

  const fs::path dir(out_dir);
  auto best = model::make_model(rec.kind, rec.model_cfg, seed);
  best->params = rec.final_params;
  ckpt::save_checkpoint((dir / "best.json").string(), *best, seed);
  io::atomic_write(dir / "results.csv", report::results_csv({rec}));
  io::atomic_write(dir / "curve.csv", report::curve_csv(rec.curve));

  const train::EpochPoint& best_pt = rec.curve.at(static_cast<std::size_t>(rec.best_epoch) - 1);
  json summary;
  summary["model"] = rec.kind;
  summary["preset"] = rec.preset;
  summary["seed"] = seed;
  summary["epochs_ran"] = rec.epochs_ran;
  summary["best_epoch"] = rec.best_epoch;
  summary["best_val_f1"] = best_pt.val_f1;
  summary["best_val_acc"] = best_pt.val_acc;
  summary["test_accuracy"] = rec.test_acc;
  summary["test_f1"] = rec.test_f1;
  summary["param_count"] = rec.param_count;
  summary["wall_seconds"] = rec.wall_seconds;
  io::atomic_write(dir / "summary.json", summary.dump(2) + "\n");

  std::printf("best epoch %d/%d  val_f1=%s\n", rec.best_epoch, rec.epochs_ran,
              g17(best_pt.val_f1).c_str());
  std::printf("test accuracy=%s f1=%s (tp=%ld fp=%ld fn=%ld tn=%ld)\n",
              g17(rec.test_acc).c_str(), g17(rec.test_f1).c_str(), rec.test_conf.tp,
              rec.test_conf.fp, rec.test_conf.fn, rec.test_conf.tn);
  std::printf("wrote %s\n", (dir / "best.json").string().c_str());
  return 0;
}

// ---- evaluate ----

int cmd_evaluate(const std::string& checkpoint_path, const std::string& data_dir,
                 const std::string& split, const std::string& config_path) {
  config::ExperimentConfig cfg = load_config_or_default(config_path);
  require_file(checkpoint_path);
  const ckpt::LoadedCheckpoint loaded = ckpt::load_checkpoint(checkpoint_path);
  cfg.model = loaded.model->cfg;

  const LoadedData d = load_data_dir(data_dir);
  const AssembledData a = assemble(d, cfg);
  const data::Dataset& ds = split == "train" ? a.splits.train
                            : split == "val" ? a.splits.val
                                             : a.splits.test;

  const graph::IndustryGraph* g = loaded.model->needs_graph() ? &a.graph : nullptr;
  const train::EvalResult res = train::evaluate(*loaded.model, ds, g);
  std::printf("model=%s preset=%s split=%s n=%ld\n", loaded.model->kind.c_str(),
              loaded.model->preset.c_str(), split.c_str(), res.conf.total());
  std::printf("accuracy=%s f1=%s loss=%s\n", g17(res.conf.accuracy()).c_str(),
              g17(res.conf.f1()).c_str(), g17(res.loss).c_str());
  std::printf("tp=%ld fp=%ld fn=%ld tn=%ld\n", res.conf.tp, res.conf.fp, res.conf.fn,
              res.conf.tn);
  return 0;
}

// ---- ablate ----

int cmd_ablate(const std::string& config_path, const std::string& data_dir,
               const std::string& out_dir, int workers,
               const std::optional<std::uint64_t>& seed_flag) {
  config::ExperimentConfig cfg = load_config_or_default(config_path);
  if (seed_flag) {
    cfg.seeds = {*seed_flag};
  } else if (const auto e = env_seed()) {
    cfg.seeds = {*e};
  }

  const LoadedData d = load_data_dir(data_dir);
  const AssembledData a = assemble(d, cfg);

  std::printf("ablation grid: %zu rows x %zu seeds, %d worker(s)\n", cfg.grid.size(),
              cfg.seeds.size(), workers);
  if (cfg.seeds.size() < 2)
    std::fprintf(stderr,
                 "warning: single seed, sample std is undefined and reported as 0\n");
  const std::vector<train::RunRecord> records = train::multi_seed_experiment(
      cfg.grid, cfg.seeds, cfg.model, a.splits, a.graph, cfg.train, workers);
  const std::vector<train::AggregateRow> agg = train::aggregate(cfg.grid, records);

  const fs::path dir(out_dir);
  io::atomic_write(dir / "results.csv", report::results_csv(records));
  io::atomic_write(dir / "aggregate.csv", report::aggregate_csv(agg));
  for (const auto& rec : records) {
    const std::string label = rec.kind == "hgnn" ? rec.kind + "_" + rec.preset : rec.kind;
    io::atomic_write(dir / "curves" / (label + "_seed" + std::to_string(rec.seed) + ".csv"),
                     report::curve_csv(rec.curve));
  }
  const std::string table = report::format_table(agg);
  io::atomic_write(dir / "table.txt", table);
  std::fputs(table.c_str(), stdout);
  return 0;
}

// ---- gradcheck ----

int cmd_gradcheck(const std::optional<std::uint64_t>& seed_flag, bool inject_bug,
                  const std::string& out_path) {
  const std::uint64_t seed = resolve_seed(seed_flag, 1);
  const diff::GradCheckReport ops = gradsuite::run_op_suite(seed, inject_bug);
  const diff::GradCheckReport e2e = gradsuite::end_to_end_check(seed);

  json j;
  j["seed"] = seed;
  j["op_suite"] = ckpt::gradcheck_report_json(ops);
  j["end_to_end"] = ckpt::gradcheck_report_json(e2e);
  j["pass"] = ops.pass && e2e.pass;
  const std::string text = j.dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  if (!out_path.empty()) io::atomic_write(out_path, text);

  if (!ops.pass || !e2e.pass) {
    for (const auto* rep : {&ops, &e2e})
      for (const auto& e : rep->entries)
        if (!e.pass)
          std::fprintf(stderr, "gradcheck FAILED: %s max_rel_err=%s\n", e.name.c_str(),
                       g17(e.max_rel_err).c_str());
    return 1;
  }
  return 0;
}

// ---- report ----

struct ReportAggregate {
  std::vector<train::AggregateRow> rows;
};

// Prefers aggregate.csv; falls back to re-aggregating results.csv so a
// single-run (train) directory also reports.
ReportAggregate gather_aggregates(const fs::path& dir) {
  ReportAggregate out;
  if (fs::exists(dir / "aggregate.csv")) {
    out.rows = report::parse_aggregate_csv(io::read_file(dir / "aggregate.csv"));
    return out;
  }
  if (!fs::exists(dir / "results.csv"))
    throw DataError("no runs found in " + dir.string() +
                    " (expected aggregate.csv or results.csv)");
  const auto rows = report::parse_results_csv(io::read_file(dir / "results.csv"));
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.kind, r.preset);
    bool seen = false;
    for (const auto& k : order) seen = seen || k == key;
    if (!seen) order.push_back(key);
  }
  for (const auto& [kind, preset] : order) {
    std::vector<double> accs, f1s;
    for (const auto& r : rows) {
      if (r.kind != kind || r.preset != preset) continue;
      accs.push_back(r.accuracy);
      f1s.push_back(r.f1);
    }
    train::AggregateRow a;
    a.kind = kind;
    a.preset = preset;
    a.n_seeds = static_cast<int>(accs.size());
    train::mean_std(accs, a.acc_mean, a.acc_std);
    train::mean_std(f1s, a.f1_mean, a.f1_std);
    out.rows.push_back(std::move(a));
  }
  return out;
}

int cmd_report(const std::string& run_dir) {
  const fs::path dir(run_dir);
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  const ReportAggregate agg = gather_aggregates(dir);

  std::string bars = "label,acc_mean,acc_std,f1_mean,f1_std,n_seeds\n";
  for (const auto& r : agg.rows) {
    const std::string label = r.kind == "hgnn" ? "hgnn_" + r.preset : r.kind;
    bars += label + "," + g17(r.acc_mean) + "," + g17(r.acc_std) + "," + g17(r.f1_mean) +
            "," + g17(r.f1_std) + "," + std::to_string(r.n_seeds) + "\n";
  }
  io::atomic_write(dir / "plot_bars.csv", bars);

  // Collect loss curves from this dir (train runs) and curves/ (ablate runs).
  std::vector<fs::path> curve_files;
  if (fs::exists(dir / "curve.csv")) curve_files.push_back(dir / "curve.csv");
  if (fs::is_directory(dir / "curves"))
    for (const auto& ent : fs::directory_iterator(dir / "curves"))
      if (ent.path().extension() == ".csv") curve_files.push_back(ent.path());
  std::sort(curve_files.begin(), curve_files.end());
  if (!curve_files.empty()) {
    std::string curves = "source,epoch,train_loss,val_loss,val_f1\n";
    for (const auto& f : curve_files) {
      const std::string source = f.stem().string();
      std::istringstream in(io::read_file(f));
      std::string line;
      bool header = true;
      while (std::getline(in, line)) {
        if (header) {
          header = false;
          continue;
        }
        if (!line.empty()) curves += source + "," + line + "\n";
      }
    }
    io::atomic_write(dir / "plot_curves.csv", curves);
  }

  std::fputs(report::format_table(agg.rows).c_str(), stdout);
  std::printf("wrote %s\n", (dir / "plot_bars.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hgnn: curb-stock type prediction experiments"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, checkpoint_path, split = "test";
  std::string model_kind = "hgnn", preset, run_dir, gradcheck_out;
  std::optional<std::uint64_t> seed_flag;
  int workers = 1;
  bool inject_bug = false;

  auto* gen = app.add_subcommand("generate", "Generate a synthetic corpus");
  gen->add_option("--config", config_path, "Experiment config JSON")
      ->check(CLI::ExistingFile);
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--seed", seed_flag, "Generator seed (overrides HGNN_SEED and config)");

  auto* tr = app.add_subcommand("train", "Train one model");
  tr->add_option("--config", config_path, "Experiment config JSON")->check(CLI::ExistingFile);
  tr->add_option("--data", data_dir, "Data directory (daily/minute/industry CSVs)")
      ->required();
  tr->add_option("--out", out_dir, "Run output directory")->required();
  tr->add_option("--model", model_kind, "Model kind: hgnn | logreg | lstm | gcn")
      ->check(CLI::IsMember({"hgnn", "logreg", "lstm", "gcn"}));
  tr->add_option("--preset", preset,
                 "View preset for hgnn (node, node_relation, node_market, full, m, i)");
  tr->add_option("--seed", seed_flag, "Training seed (overrides HGNN_SEED and config)");

  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on a split");
  ev->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON")->required();
  ev->add_option("--data", data_dir, "Data directory")->required();
  ev->add_option("--split", split, "Split: train | val | test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  ev->add_option("--config", config_path,
                 "Experiment config JSON (must match the training-time config)")
      ->check(CLI::ExistingFile);

  auto* ab = app.add_subcommand("ablate", "Run the model/preset x seed grid");
  ab->add_option("--config", config_path, "Experiment config JSON")->check(CLI::ExistingFile);
  ab->add_option("--data", data_dir, "Data directory")->required();
  ab->add_option("--out", out_dir, "Grid output directory")->required();
  ab->add_option("--workers", workers, "Worker threads (results identical for any count)")
      ->check(CLI::PositiveNumber);
  ab->add_option("--seed", seed_flag, "Single seed replacing the config seed list");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient suites");
  gc->add_option("--seed", seed_flag, "Suite seed (overrides HGNN_SEED; default 1)");
  gc->add_option("--out", gradcheck_out, "Also write the JSON report here");
  gc->add_flag("--inject-bug", inject_bug,
               "Negative control: corrupt one adjoint and expect failure");

  auto* rp = app.add_subcommand("report", "Format tables and plot data from a run directory");
  rp->add_option("run_dir", run_dir, "Directory with results.csv / aggregate.csv")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(config_path, out_dir, seed_flag);
    if (tr->parsed())
      return cmd_train(config_path, data_dir, out_dir, model_kind, preset, seed_flag);
    if (ev->parsed()) return cmd_evaluate(checkpoint_path, data_dir, split, config_path);
    if (ab->parsed()) return cmd_ablate(config_path, data_dir, out_dir, workers, seed_flag);
    if (gc->parsed()) return cmd_gradcheck(seed_flag, inject_bug, gradcheck_out);
    if (rp->parsed()) return cmd_report(run_dir);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
