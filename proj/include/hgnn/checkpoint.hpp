#pragma once

// JSON serialization: model checkpoints, model config, gradcheck reports.
// Doubles are emitted with shortest-round-trip formatting, so a load
// reproduces every bit of the saved values.

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgnn/baselines.hpp"
#include "hgnn/diff.hpp"
#include "hgnn/io.hpp"
#include "hgnn/model.hpp"
#include "hgnn/rng.hpp"

namespace hgnn::ckpt {

using nlohmann::json;

inline void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const auto& k : known)
      if (key == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

inline json model_config_to_json(const model::HgnnConfig& c) {
  json j;
  j["T"] = c.T;
  j["F"] = c.F;
  j["U"] = c.U;
  j["V"] = c.V;
  j["mlp_hidden_dims"] = c.mlp_hidden_dims;
  j["views"] = c.views_name();
  j["use_curb_features"] = c.use_curb_features;
  j["market_aggregand"] =
      c.market_aggregand == model::HgnnConfig::Aggregand::relation ? "relation" : "node";
  return j;
}

inline model::HgnnConfig model_config_from_json(const json& j) {
  reject_unknown_keys(j, {"T", "F", "U", "V", "mlp_hidden_dims", "views",
                          "use_curb_features", "market_aggregand"},
                      "model config");
  model::HgnnConfig c;
  c.T = j.value("T", c.T);
  c.F = j.value("F", c.F);
  c.U = j.value("U", c.U);
  c.V = j.value("V", c.V);
  if (j.contains("mlp_hidden_dims"))
    c.mlp_hidden_dims = j.at("mlp_hidden_dims").get<std::vector<int>>();
  if (j.contains("views")) c = model::apply_preset(c, j.at("views").get<std::string>());
  c.use_curb_features = j.value("use_curb_features", c.use_curb_features);
  if (j.contains("market_aggregand")) {
    const std::string a = j.at("market_aggregand").get<std::string>();
    if (a == "relation")
      c.market_aggregand = model::HgnnConfig::Aggregand::relation;
    else if (a == "node")
      c.market_aggregand = model::HgnnConfig::Aggregand::node;
    else
      throw ConfigError("market_aggregand must be 'relation' or 'node'");
  }
  c.validate();
  return c;
}

inline std::string config_fingerprint(const model::HgnnConfig& c) {
  const std::uint64_t h = fnv1a64(model_config_to_json(c).dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline json checkpoint_to_json(const model::ModelBase& m, std::uint64_t seed) {
  json j;
  j["kind"] = m.kind;
  j["preset"] = m.preset;
  j["seed"] = seed;
  j["config"] = model_config_to_json(m.cfg);
  j["fingerprint"] = config_fingerprint(m.cfg);
  json params = json::array();
  for (std::size_t i = 0; i < m.params.count(); ++i) {
    const Array& a = m.params.array(i);
    json p;
    p["name"] = m.params.name(i);
    p["rows"] = a.rows;
    p["cols"] = a.cols;
    p["values"] = a.v;
    params.push_back(std::move(p));
  }
  j["params"] = std::move(params);
  return j;
}

inline void save_checkpoint(const std::string& path, const model::ModelBase& m,
                            std::uint64_t seed) {
  io::atomic_write(path, checkpoint_to_json(m, seed).dump(2) + "\n");
}

struct LoadedCheckpoint {
  std::unique_ptr<model::ModelBase> model;
  std::uint64_t seed = 0;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  reject_unknown_keys(j, {"kind", "preset", "seed", "config", "fingerprint", "params"},
                      "checkpoint");
  LoadedCheckpoint out;
  const auto kind = j.at("kind").get<std::string>();
  const auto cfg = model_config_from_json(j.at("config"));
  out.seed = j.at("seed").get<std::uint64_t>();
  out.model = model::make_model(kind, cfg, out.seed);
  if (j.at("fingerprint").get<std::string>() != config_fingerprint(cfg))
    throw ParseError(path + ": config fingerprint mismatch");

  std::size_t seen = 0;
  for (const auto& p : j.at("params")) {
    reject_unknown_keys(p, {"name", "rows", "cols", "values"}, "checkpoint param");
    const auto name = p.at("name").get<std::string>();
    Array& a = out.model->params.at(name);
    if (p.at("rows").get<int>() != a.rows || p.at("cols").get<int>() != a.cols)
      throw ParseError(path + ": shape mismatch for parameter " + name);
    const auto vals = p.at("values").get<std::vector<double>>();
    if (vals.size() != a.size())
      throw ParseError(path + ": value count mismatch for parameter " + name);
    a.v = vals;
    ++seen;
  }
  if (seen != out.model->params.count())
    throw ParseError(path + ": checkpoint has " + std::to_string(seen) +
                     " params, model needs " + std::to_string(out.model->params.count()));
  return out;
}

inline json gradcheck_report_json(const diff::GradCheckReport& r) {
  json j;
  j["pass"] = r.pass;
  j["step"] = r.step;
  j["tolerance"] = r.tolerance;
  json entries = json::array();
  for (const auto& e : r.entries) {
    json je;
    je["name"] = e.name;
    je["max_rel_err"] = e.max_rel_err;
    je["max_abs_err"] = e.max_abs_err;
    je["pass"] = e.pass;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  return j;
}

}  // namespace hgnn::ckpt
