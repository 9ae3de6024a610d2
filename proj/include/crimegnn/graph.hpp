#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crimegnn/error.hpp"

namespace crimegnn {

using NodeId = std::size_t;
using CommunityId = std::size_t;

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  double weight = 1.0;
};

struct Neighbor {
  NodeId node;
  double weight;
};

// Immutable weighted undirected graph in compressed adjacency form.
//
// Every undirected edge {u, v} with u != v is listed in both neighbor lists.
// A self-loop of weight w is listed once, in its own node's list, and counts
// as 2w toward the degree, i.e. the adjacency-matrix diagonal is A_vv = 2w.
// With this convention sum(degrees) == 2 * total_weight().
class Graph {
 public:
  Graph() = default;

  std::size_t size() const noexcept { return degrees_.size(); }

  std::span<const Neighbor> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }

  double degree(NodeId v) const { return degrees_[v]; }
  std::span<const double> degrees() const noexcept { return degrees_; }

  // Loop weight w of v (0 when there is none).
  double self_loop(NodeId v) const { return self_loops_[v]; }

  // m: the sum of all undirected edge weights, self-loops included once.
  double total_weight() const noexcept { return total_weight_; }

  // Number of distinct undirected edges (self-loops included).
  std::size_t edge_count() const noexcept { return edge_count_; }

  // Each undirected edge once, with u <= v, in (u, v) lexicographic order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (NodeId u = 0; u < size(); ++u) {
      for (const auto& nb : neighbors(u)) {
        if (u <= nb.node) out.push_back({u, nb.node, nb.weight});
      }
    }
    return out;
  }

  // Entry of the adjacency matrix, so A(v, v) == 2 * self_loop(v).
  double matrix_weight(NodeId u, const Neighbor& nb) const {
    return u == nb.node ? 2.0 * nb.weight : nb.weight;
  }

 private:
  friend Graph build_graph(std::size_t n, std::span<const Edge> edges);

  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
  std::vector<double> degrees_;
  std::vector<double> self_loops_;
  double total_weight_ = 0.0;
  std::size_t edge_count_ = 0;
};

// Builds a graph from an undirected edge sequence. (u, v) and (v, u) are the
// same edge and duplicates merge by summing weights.
inline Graph build_graph(std::size_t n, std::span<const Edge> edges) {
  if (n == 0) throw Error("graph must have at least one node");

  std::vector<Edge> sorted;
  sorted.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n) {
      throw Error("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                  ") references a node outside [0, " + std::to_string(n) + ")");
    }
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw Error("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                  ") needs a positive finite weight");
    }
    sorted.push_back({std::min(e.u, e.v), std::max(e.u, e.v), e.weight});
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });

  std::vector<Edge> merged;
  for (const auto& e : sorted) {
    if (!merged.empty() && merged.back().u == e.u && merged.back().v == e.v) {
      merged.back().weight += e.weight;
    } else {
      merged.push_back(e);
    }
  }

  Graph g;
  g.degrees_.assign(n, 0.0);
  g.self_loops_.assign(n, 0.0);
  g.edge_count_ = merged.size();

  std::vector<std::size_t> counts(n, 0);
  for (const auto& e : merged) {
    ++counts[e.u];
    if (e.u != e.v) ++counts[e.v];
  }
  g.offsets_.assign(n + 1, 0);
  std::partial_sum(counts.begin(), counts.end(), g.offsets_.begin() + 1);
  g.adjacency_.resize(g.offsets_[n]);

  // Merged edges are sorted by (u, v), so filling in this order leaves every
  // neighbor list sorted by node id.
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  std::vector<std::vector<Neighbor>> lower(n);
  for (const auto& e : merged) {
    if (e.u == e.v) {
      g.self_loops_[e.u] = e.weight;
      g.degrees_[e.u] += 2.0 * e.weight;
    } else {
      g.degrees_[e.u] += e.weight;
      g.degrees_[e.v] += e.weight;
      lower[e.v].push_back({e.u, e.weight});
    }
  }
  for (NodeId v = 0; v < n; ++v) {
    for (const auto& nb : lower[v]) g.adjacency_[cursor[v]++] = nb;
  }
  for (const auto& e : merged) {
    g.adjacency_[cursor[e.u]++] = {e.v, e.weight};
  }

  double twice_m = 0.0;
  for (const double d : g.degrees_) twice_m += d;
  g.total_weight_ = twice_m / 2.0;
  return g;
}

inline Graph build_graph(std::size_t n, std::initializer_list<Edge> edges) {
  return build_graph(n, std::span<const Edge>(edges.begin(), edges.size()));
}

// Hard community assignment in canonical form: ids 0..k-1 numbered by first
// appearance in node order.
class Partition {
 public:
  Partition() = default;

  // Canonicalizes arbitrary labels.
  explicit Partition(std::span<const std::size_t> raw) {
    if (raw.empty()) throw Error("partition must cover at least one node");
    std::unordered_map<std::size_t, CommunityId> remap;
    labels_.reserve(raw.size());
    for (const auto label : raw) {
      auto [it, inserted] = remap.try_emplace(label, remap.size());
      labels_.push_back(it->second);
    }
    k_ = remap.size();
  }

  explicit Partition(const std::vector<std::size_t>& raw)
      : Partition(std::span<const std::size_t>(raw)) {}

  static Partition singletons(std::size_t n) {
    std::vector<std::size_t> labels(n);
    std::iota(labels.begin(), labels.end(), std::size_t{0});
    return Partition(labels);
  }

  static Partition whole(std::size_t n) {
    return Partition(std::vector<std::size_t>(n, 0));
  }

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t community_count() const noexcept { return k_; }
  CommunityId operator[](NodeId v) const { return labels_[v]; }
  std::span<const CommunityId> labels() const noexcept { return labels_; }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<CommunityId> labels_;
  std::size_t k_ = 0;
};

inline Partition canonicalize(std::span<const std::size_t> labels) {
  return Partition(labels);
}

inline void require_compatible(const Graph& g, const Partition& p) {
  if (g.size() != p.size()) {
    throw Error("partition covers " + std::to_string(p.size()) +
                " nodes but the graph has " + std::to_string(g.size()));
  }
}

// Collapses each community into one node. Intra-community weight becomes a
// self-loop and parallel inter-community edges are summed, so the total
// weight m is preserved.
inline Graph aggregate(const Graph& g, const Partition& p) {
  require_compatible(g, p);
  std::vector<Edge> edges;
  edges.reserve(g.edge_count());
  for (const auto& e : g.edges()) {
    edges.push_back({p[e.u], p[e.v], e.weight});
  }
  return build_graph(p.community_count(), edges);
}

}  // namespace crimegnn
