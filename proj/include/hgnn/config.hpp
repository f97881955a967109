#pragma once

// Experiment configuration file: generator + model + training settings,
// seeds, and the experiment grid. Strict parsing: unknown keys are errors,
// and a round-trip through disk is lossless.

#include <string>
#include <vector>

#include <json.hpp>

#include "hgnn/checkpoint.hpp"
#include "hgnn/io.hpp"
#include "hgnn/synthetic.hpp"
#include "hgnn/train.hpp"

namespace hgnn::config {

using nlohmann::json;

struct ExperimentConfig {
  synth::GenConfig gen;
  model::HgnnConfig model;
  train::TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<train::GridRow> grid = train::default_grid();
  double train_frac = 0.7;
  double val_frac = 0.1;
  int ma_window = 5;  // minute moving-average window for curb indicators
};

inline json to_json(const ExperimentConfig& c) {
  json j;
  json g;
  g["n_stocks"] = c.gen.n_stocks;
  g["n_industries"] = c.gen.n_industries;
  g["n_days"] = c.gen.n_days;
  g["limit_rate"] = c.gen.limit_rate;
  g["tick"] = c.gen.tick;
  g["minutes_per_day"] = c.gen.minutes_per_day;
  g["seed"] = c.gen.seed;
  g["p0_min"] = c.gen.p0_min;
  g["p0_max"] = c.gen.p0_max;
  g["sigma_market"] = c.gen.sigma_market;
  g["rho_market"] = c.gen.rho_market;
  g["sigma_industry"] = c.gen.sigma_industry;
  g["rho_industry"] = c.gen.rho_industry;
  g["sigma_idio"] = c.gen.sigma_idio;
  g["mean_revert"] = c.gen.mean_revert;
  g["seal_gain_industry"] = c.gen.seal_gain_industry;
  g["seal_gain_peer"] = c.gen.seal_gain_peer;
  g["seal_bias"] = c.gen.seal_bias;
  g["turnover_base"] = c.gen.turnover_base;
  j["generator"] = std::move(g);
  j["model"] = ckpt::model_config_to_json(c.model);
  json t;
  t["lr"] = c.train.adam.lr;
  t["beta1"] = c.train.adam.beta1;
  t["beta2"] = c.train.adam.beta2;
  t["eps"] = c.train.adam.eps;
  t["clip"] = c.train.adam.clip;
  t["epochs"] = c.train.epochs;
  t["patience"] = c.train.patience;
  j["train"] = std::move(t);
  j["seeds"] = c.seeds;
  json rows = json::array();
  for (const auto& r : c.grid) rows.push_back({{"kind", r.kind}, {"preset", r.preset}});
  j["grid"] = std::move(rows);
  j["train_frac"] = c.train_frac;
  j["val_frac"] = c.val_frac;
  j["ma_window"] = c.ma_window;
  return j;
}

inline ExperimentConfig from_json(const json& j) {
  ckpt::reject_unknown_keys(
      j,
      {"generator", "model", "train", "seeds", "grid", "train_frac", "val_frac",
       "ma_window"},
      "experiment config");
  ExperimentConfig c;
  if (j.contains("generator")) {
    const json& g = j.at("generator");
    ckpt::reject_unknown_keys(
        g,
        {"n_stocks", "n_industries", "n_days", "limit_rate", "tick", "minutes_per_day",
         "seed", "p0_min", "p0_max", "sigma_market", "rho_market", "sigma_industry",
         "rho_industry", "sigma_idio", "mean_revert", "seal_gain_industry",
         "seal_gain_peer", "seal_bias", "turnover_base"},
        "generator config");
    c.gen.n_stocks = g.value("n_stocks", c.gen.n_stocks);
    c.gen.n_industries = g.value("n_industries", c.gen.n_industries);
    c.gen.n_days = g.value("n_days", c.gen.n_days);
    c.gen.limit_rate = g.value("limit_rate", c.gen.limit_rate);
    c.gen.tick = g.value("tick", c.gen.tick);
    c.gen.minutes_per_day = g.value("minutes_per_day", c.gen.minutes_per_day);
    c.gen.seed = g.value("seed", c.gen.seed);
    c.gen.p0_min = g.value("p0_min", c.gen.p0_min);
    c.gen.p0_max = g.value("p0_max", c.gen.p0_max);
    c.gen.sigma_market = g.value("sigma_market", c.gen.sigma_market);
    c.gen.rho_market = g.value("rho_market", c.gen.rho_market);
    c.gen.sigma_industry = g.value("sigma_industry", c.gen.sigma_industry);
    c.gen.rho_industry = g.value("rho_industry", c.gen.rho_industry);
    c.gen.sigma_idio = g.value("sigma_idio", c.gen.sigma_idio);
    c.gen.mean_revert = g.value("mean_revert", c.gen.mean_revert);
    c.gen.seal_gain_industry = g.value("seal_gain_industry", c.gen.seal_gain_industry);
    c.gen.seal_gain_peer = g.value("seal_gain_peer", c.gen.seal_gain_peer);
    c.gen.seal_bias = g.value("seal_bias", c.gen.seal_bias);
    c.gen.turnover_base = g.value("turnover_base", c.gen.turnover_base);
  }
  if (j.contains("model")) c.model = ckpt::model_config_from_json(j.at("model"));
  if (j.contains("train")) {
    const json& t = j.at("train");
    ckpt::reject_unknown_keys(
        t, {"lr", "beta1", "beta2", "eps", "clip", "epochs", "patience"}, "train config");
    c.train.adam.lr = t.value("lr", c.train.adam.lr);
    c.train.adam.beta1 = t.value("beta1", c.train.adam.beta1);
    c.train.adam.beta2 = t.value("beta2", c.train.adam.beta2);
    c.train.adam.eps = t.value("eps", c.train.adam.eps);
    c.train.adam.clip = t.value("clip", c.train.adam.clip);
    c.train.epochs = t.value("epochs", c.train.epochs);
    c.train.patience = t.value("patience", c.train.patience);
  }
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (c.seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (j.contains("grid")) {
    c.grid.clear();
    for (const auto& r : j.at("grid")) {
      ckpt::reject_unknown_keys(r, {"kind", "preset"}, "grid row");
      train::GridRow row;
      row.kind = r.at("kind").get<std::string>();
      row.preset = r.value("preset", std::string("-"));
      c.grid.push_back(std::move(row));
    }
    if (c.grid.empty()) throw ConfigError("grid must be nonempty");
  }
  c.train_frac = j.value("train_frac", c.train_frac);
  c.val_frac = j.value("val_frac", c.val_frac);
  if (!(c.train_frac > 0 && c.val_frac > 0 && c.train_frac + c.val_frac < 1))
    throw ConfigError("need 0 < train_frac, 0 < val_frac, train_frac + val_frac < 1");
  c.ma_window = j.value("ma_window", c.ma_window);
  if (c.ma_window < 1) throw ConfigError("ma_window must be >= 1");
  return c;
}

inline ExperimentConfig load(const std::string& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return from_json(j);
}

inline void save(const std::string& path, const ExperimentConfig& c) {
  io::atomic_write(path, to_json(c).dump(2) + "\n");
}

}  // namespace hgnn::config
