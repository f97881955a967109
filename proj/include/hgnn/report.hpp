#pragma once

// Result CSV emission/parsing and the formatted comparison table.

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "hgnn/errors.hpp"
#include "hgnn/train.hpp"

namespace hgnn::report {

namespace detail {

inline std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename Fn>
void parse_csv(const std::string& text, const std::string& header, std::size_t nf,
               const std::string& what, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    if (line_no == 1) {
      if (line != header) throw ParseError(what + ": bad header '" + line + "'");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != nf)
      throw ParseError(what + " line " + std::to_string(line_no) + ": expected " +
                       std::to_string(nf) + " fields");
    fn(f);
  }
}

}  // namespace detail

inline const char* kResultsHeader = "model,preset,seed,split,accuracy,f1,tp,fp,fn,tn,epochs_ran";
inline const char* kAggregateHeader = "model,preset,acc_mean,acc_std,f1_mean,f1_std,n_seeds";
inline const char* kCurveHeader = "epoch,train_loss,val_loss,val_f1";

inline std::string results_csv(const std::vector<train::RunRecord>& records) {
  std::string out = std::string(kResultsHeader) + "\n";
  for (const auto& r : records) {
    out += r.kind + "," + r.preset + "," + std::to_string(r.seed) + ",test," +
           detail::g17(r.test_acc) + "," + detail::g17(r.test_f1) + "," +
           std::to_string(r.test_conf.tp) + "," + std::to_string(r.test_conf.fp) + "," +
           std::to_string(r.test_conf.fn) + "," + std::to_string(r.test_conf.tn) + "," +
           std::to_string(r.epochs_ran) + "\n";
  }
  return out;
}

inline std::string aggregate_csv(const std::vector<train::AggregateRow>& rows) {
  std::string out = std::string(kAggregateHeader) + "\n";
  for (const auto& r : rows) {
    out += r.kind + "," + r.preset + "," + detail::g17(r.acc_mean) + "," +
           detail::g17(r.acc_std) + "," + detail::g17(r.f1_mean) + "," +
           detail::g17(r.f1_std) + "," + std::to_string(r.n_seeds) + "\n";
  }
  return out;
}

inline std::string curve_csv(const std::vector<train::EpochPoint>& curve) {
  std::string out = std::string(kCurveHeader) + "\n";
  for (const auto& p : curve)
    out += std::to_string(p.epoch) + "," + detail::g17(p.train_loss) + "," +
           detail::g17(p.val_loss) + "," + detail::g17(p.val_f1) + "\n";
  return out;
}

struct ResultRow {
  std::string kind, preset, split;
  std::uint64_t seed = 0;
  double accuracy = 0, f1 = 0;
  long tp = 0, fp = 0, fn = 0, tn = 0;
  int epochs_ran = 0;
};

inline std::vector<ResultRow> parse_results_csv(const std::string& text) {
  std::vector<ResultRow> rows;
  detail::parse_csv(text, kResultsHeader, 11, "results csv",
                    [&](const std::vector<std::string>& f) {
                      ResultRow r;
                      r.kind = f[0];
                      r.preset = f[1];
                      r.seed = std::stoull(f[2]);
                      r.split = f[3];
                      r.accuracy = std::stod(f[4]);
                      r.f1 = std::stod(f[5]);
                      r.tp = std::stol(f[6]);
                      r.fp = std::stol(f[7]);
                      r.fn = std::stol(f[8]);
                      r.tn = std::stol(f[9]);
                      r.epochs_ran = std::stoi(f[10]);
                      rows.push_back(std::move(r));
                    });
  return rows;
}

inline std::vector<train::AggregateRow> parse_aggregate_csv(const std::string& text) {
  std::vector<train::AggregateRow> rows;
  detail::parse_csv(text, kAggregateHeader, 7, "aggregate csv",
                    [&](const std::vector<std::string>& f) {
                      train::AggregateRow r;
                      r.kind = f[0];
                      r.preset = f[1];
                      r.acc_mean = std::stod(f[2]);
                      r.acc_std = std::stod(f[3]);
                      r.f1_mean = std::stod(f[4]);
                      r.f1_std = std::stod(f[5]);
                      r.n_seeds = std::stoi(f[6]);
                      rows.push_back(std::move(r));
                    });
  return rows;
}

// Comparison table: one method row, Acc/F1 as mean+-std percentages.
inline std::string format_table(const std::vector<train::AggregateRow>& rows) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-28s %-16s %-16s\n", "Method", "Acc(%)", "F1(%)");
  out << buf;
  out << std::string(60, '-') << "\n";
  for (const auto& r : rows) {
    const std::string name = r.kind == "hgnn" ? "hgnn_" + r.preset : r.kind;
    char acc[32], f1[32];
    std::snprintf(acc, sizeof acc, "%.2f+-%.2f", 100.0 * r.acc_mean, 100.0 * r.acc_std);
    std::snprintf(f1, sizeof f1, "%.2f+-%.2f", 100.0 * r.f1_mean, 100.0 * r.f1_std);
    std::snprintf(buf, sizeof buf, "%-28s %-16s %-16s\n", name.c_str(), acc, f1);
    out << buf;
  }
  return std::move(out).str();
}

}  // namespace hgnn::report
