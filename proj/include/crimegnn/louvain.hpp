#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "crimegnn/error.hpp"
#include "crimegnn/graph.hpp"
#include "crimegnn/objectives.hpp"
#include "crimegnn/rng.hpp"

namespace crimegnn {

// Gains at or below this are treated as zero; candidate gains closer than
// this are treated as ties.
inline constexpr double kLouvainGainEpsilon = 1e-12;

// Community bookkeeping for one level of the Louvain method. Community ids
// live in [0, n) of the level graph; communities may become empty.
class LouvainState {
 public:
  explicit LouvainState(const Graph& g) : LouvainState(g, Partition::singletons(g.size())) {}

  LouvainState(const Graph& g, const Partition& initial)
      : graph_(&g),
        labels_(initial.labels().begin(), initial.labels().end()),
        internal_(g.size(), 0.0),
        total_(g.size(), 0.0),
        scratch_(g.size(), 0.0) {
    require_compatible(g, initial);
    two_m_ = 2.0 * g.total_weight();
    if (!(two_m_ > 0.0)) throw Error("graph has no edges (m == 0)");
    recompute_totals(internal_, total_);
  }

  const Graph& graph() const noexcept { return *graph_; }
  std::span<const CommunityId> labels() const noexcept { return labels_; }
  Partition partition() const { return Partition(labels_); }

  // Directed internal weight w_in(c) (internal edges twice, loops as 2w).
  double internal_weight(CommunityId c) const { return internal_[c]; }
  double total_degree(CommunityId c) const { return total_[c]; }

  double modularity() const {
    double q = 0.0;
    for (std::size_t c = 0; c < total_.size(); ++c) {
      const double share = total_[c] / two_m_;
      q += internal_[c] / two_m_ - share * share;
    }
    return q;
  }

  // Weight from v to the members of community c other than v.
  double weight_to(NodeId v, CommunityId c) const {
    double w = 0.0;
    for (const auto& nb : graph_->neighbors(v)) {
      if (nb.node != v && labels_[nb.node] == c) w += nb.weight;
    }
    return w;
  }

  // Q(after moving v to target) - Q(now), in O(deg v).
  double delta_q(NodeId v, CommunityId target) const {
    const CommunityId current = labels_[v];
    if (target == current) return 0.0;
    return gain(v, weight_to(v, current), weight_to(v, target), target);
  }

  void move(NodeId v, CommunityId target) {
    move(v, target, weight_to(v, labels_[v]), weight_to(v, target));
  }

  // Visits nodes in the given order; each moves to the neighboring community
  // with the largest positive gain (ties to the lowest id) or stays.
  // Returns true iff any node moved.
  bool local_move_pass(std::span<const NodeId> order) {
    bool improved = false;
    std::vector<CommunityId> touched;
    for (const NodeId v : order) {
      const CommunityId current = labels_[v];
      touched.clear();
      for (const auto& nb : graph_->neighbors(v)) {
        if (nb.node == v) continue;
        const CommunityId c = labels_[nb.node];
        if (scratch_[c] == 0.0) touched.push_back(c);
        scratch_[c] += nb.weight;
      }
      const double to_current = scratch_[current];
      CommunityId best = current;
      double best_gain = 0.0;
      for (const CommunityId c : touched) {
        if (c == current) continue;
        const double g = gain(v, to_current, scratch_[c], c);
        if (g <= kLouvainGainEpsilon) continue;
        if (best == current || g > best_gain + kLouvainGainEpsilon ||
            (std::abs(g - best_gain) <= kLouvainGainEpsilon && c < best)) {
          best = c;
          best_gain = g;
        }
      }
      const double to_best = scratch_[best];
      for (const CommunityId c : touched) scratch_[c] = 0.0;
      if (best != current) {
        move(v, best, to_current, to_best);
        improved = true;
      }
    }
    return improved;
  }

  // Compares the incrementally tracked totals with a from-scratch recount.
  bool totals_consistent(double tolerance = 1e-9) const {
    std::vector<double> internal(internal_.size(), 0.0);
    std::vector<double> total(total_.size(), 0.0);
    recompute_totals(internal, total);
    for (std::size_t c = 0; c < internal.size(); ++c) {
      if (std::abs(internal[c] - internal_[c]) > tolerance ||
          std::abs(total[c] - total_[c]) > tolerance) {
        return false;
      }
    }
    return true;
  }

 private:
  double gain(NodeId v, double to_current, double to_target, CommunityId target) const {
    const double m = two_m_ / 2.0;
    const double d = graph_->degree(v);
    const double rest_of_current = total_[labels_[v]] - d;
    return (to_target - to_current) / m - d * (total_[target] - rest_of_current) / (2.0 * m * m);
  }

  void move(NodeId v, CommunityId target, double to_current, double to_target) {
    const CommunityId current = labels_[v];
    if (target == current) return;
    const double loop = 2.0 * graph_->self_loop(v);
    const double d = graph_->degree(v);
    internal_[current] -= 2.0 * to_current + loop;
    total_[current] -= d;
    internal_[target] += 2.0 * to_target + loop;
    total_[target] += d;
    labels_[v] = target;
  }

  void recompute_totals(std::vector<double>& internal, std::vector<double>& total) const {
    for (NodeId u = 0; u < graph_->size(); ++u) {
      total[labels_[u]] += graph_->degree(u);
      for (const auto& nb : graph_->neighbors(u)) {
        if (labels_[nb.node] == labels_[u]) internal[labels_[u]] += graph_->matrix_weight(u, nb);
      }
    }
  }

  const Graph* graph_;
  std::vector<CommunityId> labels_;
  std::vector<double> internal_;
  std::vector<double> total_;
  std::vector<double> scratch_;
  double two_m_ = 0.0;
};

struct LouvainResult {
  Partition partition;
  double modularity = 0.0;
  std::size_t levels = 0;
};

// Local moving to a fixed point (a fresh seeded shuffle per pass), then
// aggregation; stops at the first level where no node moves.
inline LouvainResult louvain(const Graph& g, std::uint64_t seed) {
  if (!(g.total_weight() > 0.0)) throw Error("graph has no edges (m == 0)");
  Rng rng(seed);
  std::vector<std::size_t> membership(g.size());
  std::iota(membership.begin(), membership.end(), std::size_t{0});

  Graph level = g;
  std::size_t levels = 0;
  while (true) {
    LouvainState state(level);
    std::vector<NodeId> order(level.size());
    std::iota(order.begin(), order.end(), NodeId{0});
    bool any_move = false;
    while (true) {
      rng.shuffle(std::span<NodeId>(order));
      if (!state.local_move_pass(order)) break;
      any_move = true;
    }
    if (!any_move) break;
    ++levels;
    const Partition p = state.partition();
    for (auto& m : membership) m = p[m];
    level = aggregate(level, p);
  }

  LouvainResult result{Partition(membership), 0.0, levels};
  result.modularity = modularity(g, result.partition);
  return result;
}

}  // namespace crimegnn
