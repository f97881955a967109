#pragma once

// Stock industry relationship graph. Stocks in the same industry form a
// clique; the graph convolution normalizes each (j, s) contribution by
// r_{j,s} = sqrt(deg(j) * deg(s)) with self-loop-inclusive degrees, which
// is the renormalized adjacency D^{-1/2}(A + I)D^{-1/2}.

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hgnn/array.hpp"
#include "hgnn/diff.hpp"
#include "hgnn/errors.hpp"

namespace hgnn::graph {

class IndustryGraph {
 public:
  // Clique per industry. Node indices follow sorted stock_id order so the
  // layout is independent of map iteration details.
  static IndustryGraph build(const std::map<std::string, std::string>& industry_of) {
    if (industry_of.empty()) throw ContractError("build_graph: empty industry map");
    IndustryGraph g;
    for (const auto& [sid, ind] : industry_of) g.stock_ids_.push_back(sid);
    std::sort(g.stock_ids_.begin(), g.stock_ids_.end());
    g.adj_.resize(g.stock_ids_.size());
    for (std::size_t i = 0; i < g.stock_ids_.size(); ++i)
      g.index_of_[g.stock_ids_[i]] = static_cast<int>(i);

    std::map<std::string, std::vector<int>> members;
    for (const auto& [sid, ind] : industry_of)
      members[ind].push_back(g.index_of_.at(sid));
    for (auto& [ind, nodes] : members) {
      std::sort(nodes.begin(), nodes.end());
      for (std::size_t a = 0; a < nodes.size(); ++a)
        for (std::size_t b = a + 1; b < nodes.size(); ++b) {
          g.adj_[nodes[a]].push_back(nodes[b]);
          g.adj_[nodes[b]].push_back(nodes[a]);
        }
    }
    for (auto& nbrs : g.adj_) std::sort(nbrs.begin(), nbrs.end());
    return g;
  }

  // Arbitrary undirected edge set over n nodes (test hook; the production
  // path always builds cliques from industry labels).
  static IndustryGraph from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    if (n <= 0) throw ContractError("from_edges: node count must be positive");
    IndustryGraph g;
    g.adj_.resize(static_cast<std::size_t>(n));
    g.stock_ids_.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      g.stock_ids_.push_back("N" + std::to_string(i));
      g.index_of_[g.stock_ids_.back()] = i;
    }
    std::set<std::pair<int, int>> seen;
    for (auto [a, b] : edges) {
      if (a < 0 || a >= n || b < 0 || b >= n)
        throw IndexError("from_edges: node out of range");
      if (a == b) continue;  // self-loops are implicit in the normalization
      if (a > b) std::swap(a, b);
      if (!seen.insert({a, b}).second) continue;
      g.adj_[a].push_back(b);
      g.adj_[b].push_back(a);
    }
    for (auto& nbrs : g.adj_) std::sort(nbrs.begin(), nbrs.end());
    return g;
  }

  int node_count() const { return static_cast<int>(adj_.size()); }

  const std::vector<int>& neighbors(int s) const {
    check_node(s);
    return adj_[s];
  }

  // Self-loop inclusive, so isolated nodes have degree 1.
  int degree(int s) const {
    check_node(s);
    return static_cast<int>(adj_[s].size()) + 1;
  }

  const std::string& stock_id(int s) const {
    check_node(s);
    return stock_ids_[s];
  }

  int index_of(const std::string& stock_id) const {
    auto it = index_of_.find(stock_id);
    if (it == index_of_.end())
      throw IndexError("unknown stock_id " + stock_id);
    return it->second;
  }

  bool has_stock(const std::string& stock_id) const {
    return index_of_.contains(stock_id);
  }

  double sym_norm_coefficient(int j, int s) const {
    check_node(j);
    check_node(s);
    if (j != s && !std::binary_search(adj_[s].begin(), adj_[s].end(), j))
      throw ContractError("sym_norm_coefficient: node " + std::to_string(j) +
                          " is not a neighbor of " + std::to_string(s));
    return std::sqrt(static_cast<double>(degree(j)) * static_cast<double>(degree(s)));
  }

  // Dense D^{-1/2}(A + I)D^{-1/2}; oracle for the sparse aggregation.
  Array to_dense_normalized() const {
    const int n = node_count();
    Array m(n, n, 0.0);
    for (int s = 0; s < n; ++s) {
      m(s, s) = 1.0 / sym_norm_coefficient(s, s);
      for (int j : adj_[s]) m(s, j) = 1.0 / sym_norm_coefficient(j, s);
    }
    return m;
  }

  // Edge list `stock_id_a,stock_id_b`, lexicographic, one per line.
  std::string dump_edges() const {
    std::vector<std::string> lines;
    for (int s = 0; s < node_count(); ++s)
      for (int j : adj_[s])
        if (s < j) lines.push_back(stock_ids_[s] + "," + stock_ids_[j]);
    std::sort(lines.begin(), lines.end());
    std::ostringstream out;
    for (const auto& l : lines) out << l << "\n";
    return std::move(out).str();
  }

 private:
  void check_node(int s) const {
    if (s < 0 || s >= node_count())
      throw IndexError("graph node " + std::to_string(s) + " out of range [0, " +
                       std::to_string(node_count()) + ")");
  }

  std::vector<std::string> stock_ids_;
  std::map<std::string, int> index_of_;
  std::vector<std::vector<int>> adj_;
};

// out_s = sum_{j in N_s U {s}} e_j / r_{j,s}, recorded on the tape. The
// normalized adjacency is symmetric, so the backward pass reuses the same
// traversal on the incoming gradient.
inline diff::Var graph_aggregate(const diff::Var& e, const IndustryGraph& g) {
  diff::Tape& t = *e.tape;
  const Array& ev = t.value(e);
  if (ev.rows != g.node_count())
    throw ShapeError("graph_aggregate: embedding rows " + std::to_string(ev.rows) +
                     " != graph nodes " + std::to_string(g.node_count()));

  const auto apply = [&g](const Array& in, Array& out) {
    for (int s = 0; s < g.node_count(); ++s) {
      const double ds = static_cast<double>(g.degree(s));
      {
        const double r = 1.0 / ds;  // sqrt(ds*ds)
        for (int c = 0; c < in.cols; ++c) out(s, c) += in(s, c) * r;
      }
      for (int j : g.neighbors(s)) {
        const double r = 1.0 / std::sqrt(static_cast<double>(g.degree(j)) * ds);
        for (int c = 0; c < in.cols; ++c) out(s, c) += in(j, c) * r;
      }
    }
  };

  Array out(ev.rows, ev.cols, 0.0);
  apply(ev, out);
  const int eid = e.id;
  return t.emit(std::move(out), [eid, apply](diff::Tape& t, int self) {
    apply(t.grad_at(self), t.grad_at(eid));
  });
}

}  // namespace hgnn::graph
