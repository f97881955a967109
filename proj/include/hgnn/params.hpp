#pragma once

// Named, ordered parameter storage shared by the HGNN and the baselines.
// Registration order is the canonical order for optimizer state,
// checkpoints, and tape leasing, so it must be deterministic.

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hgnn/array.hpp"
#include "hgnn/diff.hpp"
#include "hgnn/errors.hpp"
#include "hgnn/rng.hpp"

namespace hgnn::model {

class ParamStore {
 public:
  Array& add(const std::string& name, int rows, int cols) {
    if (index_.contains(name)) throw ContractError("duplicate parameter " + name);
    index_[name] = items_.size();
    items_.emplace_back(name, Array(rows, cols, 0.0));
    return items_.back().second;
  }

  Array& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter " + name);
    return items_[it->second].second;
  }
  const Array& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter " + name);
    return items_[it->second].second;
  }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter " + name);
    return it->second;
  }

  std::size_t count() const { return items_.size(); }
  const std::string& name(std::size_t i) const { return items_[i].first; }
  Array& array(std::size_t i) { return items_[i].second; }
  const Array& array(std::size_t i) const { return items_[i].second; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, a] : items_) n += a.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& [name, a] : items_)
      if (!a.all_finite()) return false;
    return true;
  }

  // One leaf per parameter, in store order.
  std::vector<diff::Var> lease(diff::Tape& t) const {
    std::vector<diff::Var> vars;
    vars.reserve(items_.size());
    for (const auto& [name, a] : items_) vars.push_back(t.leaf(a));
    return vars;
  }

 private:
  std::vector<std::pair<std::string, Array>> items_;
  std::map<std::string, std::size_t> index_;
};

// Uniform Xavier/Glorot fill in +-sqrt(6 / (fan_in + fan_out)).
inline void xavier_fill(Array& a, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(a.rows + a.cols));
  for (double& x : a.v) x = rng.uniform(-bound, bound);
}

}  // namespace hgnn::model
