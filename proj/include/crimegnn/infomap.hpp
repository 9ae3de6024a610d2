#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "crimegnn/error.hpp"
#include "crimegnn/graph.hpp"
#include "crimegnn/rng.hpp"

namespace crimegnn {

namespace detail {

// x log2 x, with 0 for x <= 0.
inline double plogp(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

// Entropy in bits of the distribution proportional to the given weights.
inline double entropy_bits(std::span<const double> weights) {
  double total = 0.0;
  for (const double w : weights) total += w;
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (const double w : weights) h -= plogp(w / total);
  return h;
}

}  // namespace detail

struct CodelengthParts {
  double index_bits = 0.0;
  std::vector<double> module_bits;
  double total_bits = 0.0;
};

// Two-level map equation for the undirected random walk: visit rates
// p_a = d_a / 2m, module exit rates q_i = cut(i) / 2m,
//   L = q H(Q) + sum_i (q_i + sum_{a in i} p_a) H(P_i)   [bits]
inline CodelengthParts map_equation(const Graph& g, const Partition& p) {
  require_compatible(g, p);
  const double two_m = 2.0 * g.total_weight();
  if (!(two_m > 0.0)) throw Error("graph has no edges (m == 0)");

  const std::size_t k = p.community_count();
  std::vector<double> exit(k, 0.0);
  std::vector<std::vector<double>> members(k);
  for (NodeId u = 0; u < g.size(); ++u) {
    members[p[u]].push_back(g.degree(u) / two_m);
    for (const auto& nb : g.neighbors(u)) {
      if (p[nb.node] != p[u]) exit[p[u]] += nb.weight / two_m;
    }
  }

  CodelengthParts parts;
  double exit_total = 0.0;
  for (const double q : exit) exit_total += q;
  parts.index_bits = exit_total > 0.0 ? exit_total * detail::entropy_bits(exit) : 0.0;
  parts.module_bits.resize(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> codebook{exit[c]};
    codebook.insert(codebook.end(), members[c].begin(), members[c].end());
    const double usage = std::accumulate(codebook.begin(), codebook.end(), 0.0);
    parts.module_bits[c] = usage * detail::entropy_bits(codebook);
  }
  parts.total_bits = parts.index_bits;
  for (const double b : parts.module_bits) parts.total_bits += b;
  return parts;
}

inline constexpr double kInfomapGainEpsilon = 1e-12;

// Module bookkeeping for greedy codelength minimization on one level graph.
// Uses the expansion
//   L = plogp(sum q) - 2 sum plogp(q_i) - sum_a plogp(p_a) + sum plogp(q_i + p_i)
// where p_i is the visit rate of module i. The node term sum_a plogp(p_a)
// runs over the nodes of the original graph and is passed in for coarse
// levels.
class InfomapState {
 public:
  explicit InfomapState(const Graph& g) : InfomapState(g, Partition::singletons(g.size())) {}

  InfomapState(const Graph& g, const Partition& initial)
      : InfomapState(g, initial, node_term_of(g)) {}

  InfomapState(const Graph& g, const Partition& initial, double node_term)
      : graph_(&g),
        labels_(initial.labels().begin(), initial.labels().end()),
        exit_(g.size(), 0.0),
        volume_(g.size(), 0.0),
        scratch_(g.size(), 0.0),
        node_term_(node_term) {
    require_compatible(g, initial);
    two_m_ = 2.0 * g.total_weight();
    if (!(two_m_ > 0.0)) throw Error("graph has no edges (m == 0)");
    for (NodeId u = 0; u < g.size(); ++u) {
      volume_[labels_[u]] += g.degree(u);
      for (const auto& nb : g.neighbors(u)) {
        if (labels_[nb.node] != labels_[u]) exit_[labels_[u]] += nb.weight;
      }
    }
    for (std::size_t c = 0; c < exit_.size(); ++c) {
      exit_sum_ += exit_[c];
      exit_terms_ += detail::plogp(exit_[c] / two_m_);
      ring_terms_ += detail::plogp((exit_[c] + volume_[c]) / two_m_);
    }
  }

  static double node_term_of(const Graph& g) {
    const double two_m = 2.0 * g.total_weight();
    double t = 0.0;
    for (const double d : g.degrees()) t += detail::plogp(d / two_m);
    return t;
  }

  std::span<const CommunityId> labels() const noexcept { return labels_; }
  Partition partition() const { return Partition(labels_); }

  double codelength() const {
    return detail::plogp(exit_sum_ / two_m_) - 2.0 * exit_terms_ - node_term_ + ring_terms_;
  }

  double weight_to(NodeId v, CommunityId c) const {
    double w = 0.0;
    for (const auto& nb : graph_->neighbors(v)) {
      if (nb.node != v && labels_[nb.node] == c) w += nb.weight;
    }
    return w;
  }

  // Codelength change if v moved to target.
  double delta_codelength(NodeId v, CommunityId target) const {
    if (target == labels_[v]) return 0.0;
    return evaluate_move(v, target, weight_to(v, labels_[v]), weight_to(v, target)).delta;
  }

  void move(NodeId v, CommunityId target) {
    if (target == labels_[v]) return;
    apply(v, target, evaluate_move(v, target, weight_to(v, labels_[v]), weight_to(v, target)));
  }

  // Greedy pass: each node takes the neighboring module with the largest
  // strict codelength decrease (ties to the lowest id). True iff any moved.
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
      Move best_move{};
      for (const CommunityId c : touched) {
        if (c == current) continue;
        const Move mv = evaluate_move(v, c, to_current, scratch_[c]);
        if (mv.delta >= -kInfomapGainEpsilon) continue;
        if (best == current || mv.delta < best_move.delta - kInfomapGainEpsilon ||
            (std::abs(mv.delta - best_move.delta) <= kInfomapGainEpsilon && c < best)) {
          best = c;
          best_move = mv;
        }
      }
      for (const CommunityId c : touched) scratch_[c] = 0.0;
      if (best != current) {
        apply(v, best, best_move);
        improved = true;
      }
    }
    return improved;
  }

 private:
  struct Move {
    double delta = 0.0;
    double exit_from = 0.0;
    double exit_to = 0.0;
  };

  Move evaluate_move(NodeId v, CommunityId target, double to_current, double to_target) const {
    const CommunityId current = labels_[v];
    const double d = graph_->degree(v);
    const double external = d - 2.0 * graph_->self_loop(v);
    Move mv;
    mv.exit_from = std::max(0.0, exit_[current] - external + 2.0 * to_current);
    mv.exit_to = std::max(0.0, exit_[target] + external - 2.0 * to_target);
    const double new_exit_sum =
        exit_sum_ - exit_[current] - exit_[target] + mv.exit_from + mv.exit_to;
    const double vol_from = volume_[current] - d;
    const double vol_to = volume_[target] + d;
    auto r = [this](double x) { return x / two_m_; };
    using detail::plogp;
    const double d_exit_terms = plogp(r(mv.exit_from)) + plogp(r(mv.exit_to)) -
                                plogp(r(exit_[current])) - plogp(r(exit_[target]));
    const double d_ring_terms = plogp(r(mv.exit_from + vol_from)) +
                                plogp(r(mv.exit_to + vol_to)) -
                                plogp(r(exit_[current] + volume_[current])) -
                                plogp(r(exit_[target] + volume_[target]));
    mv.delta = plogp(r(new_exit_sum)) - plogp(r(exit_sum_)) - 2.0 * d_exit_terms + d_ring_terms;
    return mv;
  }

  void apply(NodeId v, CommunityId target, const Move& mv) {
    const CommunityId current = labels_[v];
    const double d = graph_->degree(v);
    auto r = [this](double x) { return x / two_m_; };
    using detail::plogp;
    exit_terms_ += plogp(r(mv.exit_from)) + plogp(r(mv.exit_to)) - plogp(r(exit_[current])) -
                   plogp(r(exit_[target]));
    ring_terms_ += plogp(r(mv.exit_from + volume_[current] - d)) +
                   plogp(r(mv.exit_to + volume_[target] + d)) -
                   plogp(r(exit_[current] + volume_[current])) -
                   plogp(r(exit_[target] + volume_[target]));
    exit_sum_ += mv.exit_from + mv.exit_to - exit_[current] - exit_[target];
    exit_[current] = mv.exit_from;
    exit_[target] = mv.exit_to;
    volume_[current] -= d;
    volume_[target] += d;
    labels_[v] = target;
  }

  const Graph* graph_;
  std::vector<CommunityId> labels_;
  std::vector<double> exit_;    // cut weight per module
  std::vector<double> volume_;  // degree sum per module
  std::vector<double> scratch_;
  double two_m_ = 0.0;
  double node_term_ = 0.0;
  double exit_sum_ = 0.0;
  double exit_terms_ = 0.0;
  double ring_terms_ = 0.0;
};

struct InfomapResult {
  Partition partition;
  double codelength = 0.0;  // bits
  std::size_t levels = 0;
};

// Louvain-style codelength minimization: greedy passes to a fixed point
// (seeded order), aggregate, repeat until a level makes no move. If the
// result does not beat the one-module code, the one-module partition is
// returned instead.
inline InfomapResult infomap(const Graph& g, std::uint64_t seed) {
  if (!(g.total_weight() > 0.0)) throw Error("graph has no edges (m == 0)");
  Rng rng(seed);
  const double node_term = InfomapState::node_term_of(g);
  std::vector<std::size_t> membership(g.size());
  std::iota(membership.begin(), membership.end(), std::size_t{0});

  Graph level = g;
  std::size_t levels = 0;
  while (true) {
    InfomapState state(level, Partition::singletons(level.size()), node_term);
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

  InfomapResult result{Partition(membership), 0.0, levels};
  result.codelength = map_equation(g, result.partition).total_bits;
  const Partition whole = Partition::whole(g.size());
  const double one_module = map_equation(g, whole).total_bits;
  if (one_module + kInfomapGainEpsilon < result.codelength) {
    result.partition = whole;
    result.codelength = one_module;
  }
  return result;
}

}  // namespace crimegnn
