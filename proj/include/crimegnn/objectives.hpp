#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crimegnn/dense.hpp"
#include "crimegnn/error.hpp"
#include "crimegnn/graph.hpp"

namespace crimegnn {

// A soft assignment is a row-stochastic n x k DenseMatrix; row i holds the
// community membership probabilities of node i.
using SoftAssignment = DenseMatrix;

namespace detail {

inline double require_edges(const Graph& g) {
  const double m = g.total_weight();
  if (!(m > 0.0)) throw Error("graph has no edges (m == 0)");
  return m;
}

}  // namespace detail

inline void validate_soft_assignment(const SoftAssignment& s, std::size_t n,
                                     double tolerance = 1e-6) {
  if (s.rows() != n) {
    throw std::invalid_argument("soft assignment has " + std::to_string(s.rows()) +
                                " rows, graph has " + std::to_string(n) + " nodes");
  }
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double sum = 0.0;
    for (const double x : s.row(i)) sum += x;
    if (std::abs(sum - 1.0) > tolerance) {
      throw Error("soft assignment row " + std::to_string(i) + " sums to " +
                  std::to_string(sum));
    }
  }
}

inline SoftAssignment one_hot(const Partition& p, std::size_t k = 0) {
  const std::size_t cols = std::max(k, p.community_count());
  SoftAssignment s(p.size(), cols);
  for (NodeId v = 0; v < p.size(); ++v) s(v, p[v]) = 1.0;
  return s;
}

// Q = sum_c [ w_in(c)/2m - (d_tot(c)/2m)^2 ], where w_in counts every internal
// edge in both directions and a self-loop of weight w as 2w. This is the
// community-sum form of (1/2m) sum_{j,k same community} (A_jk - d_j d_k / 2m).
inline double modularity(const Graph& g, const Partition& p) {
  require_compatible(g, p);
  const double two_m = 2.0 * detail::require_edges(g);
  std::vector<double> internal(p.community_count(), 0.0);
  std::vector<double> total(p.community_count(), 0.0);
  for (NodeId u = 0; u < g.size(); ++u) {
    total[p[u]] += g.degree(u);
    for (const auto& nb : g.neighbors(u)) {
      if (p[nb.node] == p[u]) internal[p[u]] += g.matrix_weight(u, nb);
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < internal.size(); ++c) {
    const double share = total[c] / two_m;
    q += internal[c] / two_m - share * share;
  }
  return q;
}

// B x = A x - d (dᵀ x) / 2m, never forming B.
inline DenseMatrix apply_modularity_operator(const Graph& g, const DenseMatrix& x) {
  if (x.rows() != g.size()) {
    throw std::invalid_argument("modularity operator: operand has " +
                                std::to_string(x.rows()) + " rows, graph has " +
                                std::to_string(g.size()) + " nodes");
  }
  const double two_m = 2.0 * detail::require_edges(g);
  const std::size_t c = x.cols();
  DenseMatrix out(x.rows(), c);
  std::vector<double> projection(c, 0.0);
  for (NodeId u = 0; u < g.size(); ++u) {
    const auto x_row = x.row(u);
    auto out_row = out.row(u);
    for (std::size_t j = 0; j < c; ++j) projection[j] += g.degree(u) * x_row[j];
    for (const auto& nb : g.neighbors(u)) {
      const double a = g.matrix_weight(u, nb);
      const auto x_nb = x.row(nb.node);
      for (std::size_t j = 0; j < c; ++j) out_row[j] += a * x_nb[j];
    }
  }
  for (NodeId u = 0; u < g.size(); ++u) {
    auto out_row = out.row(u);
    const double scale = g.degree(u) / two_m;
    for (std::size_t j = 0; j < c; ++j) out_row[j] -= scale * projection[j];
  }
  return out;
}

// (1/2m) trace(Sᵀ B S).
inline double soft_modularity(const Graph& g, const SoftAssignment& s) {
  const double two_m = 2.0 * detail::require_edges(g);
  validate_soft_assignment(s, g.size());
  const DenseMatrix bs = apply_modularity_operator(g, s);
  double trace = 0.0;
  const auto lhs = s.values();
  const auto rhs = bs.values();
  for (std::size_t i = 0; i < lhs.size(); ++i) trace += lhs[i] * rhs[i];
  return trace / two_m;
}

// Fraction of total edge weight that falls inside communities.
inline double coverage(const Graph& g, const Partition& p) {
  require_compatible(g, p);
  const double m = detail::require_edges(g);
  double inside = 0.0;
  for (const auto& e : g.edges()) {
    if (p[e.u] == p[e.v]) inside += e.weight;
  }
  return inside / m;
}

// Pairwise F1 over unordered node pairs: a pair is "positive" when both
// nodes share a community. F1 = 2 TP / (predicted pairs + true pairs); it is
// 1 when neither clustering has any co-clustered pair.
inline double pairwise_f1(const Partition& pred, const Partition& truth) {
  if (pred.size() != truth.size()) {
    throw Error("pairwise F1 needs equal-length partitions (" + std::to_string(pred.size()) +
                " vs " + std::to_string(truth.size()) + ")");
  }
  if (pred.size() < 2) throw Error("pairwise F1 needs at least two nodes");

  auto pairs = [](std::uint64_t count) { return count * (count - 1) / 2; };
  std::vector<std::uint64_t> pred_sizes(pred.community_count(), 0);
  std::vector<std::uint64_t> truth_sizes(truth.community_count(), 0);
  std::map<std::pair<CommunityId, CommunityId>, std::uint64_t> overlap;
  for (NodeId v = 0; v < pred.size(); ++v) {
    ++pred_sizes[pred[v]];
    ++truth_sizes[truth[v]];
    ++overlap[{pred[v], truth[v]}];
  }
  std::uint64_t pred_pairs = 0;
  std::uint64_t truth_pairs = 0;
  std::uint64_t both = 0;
  for (const auto s : pred_sizes) pred_pairs += pairs(s);
  for (const auto s : truth_sizes) truth_pairs += pairs(s);
  for (const auto& [key, s] : overlap) both += pairs(s);

  if (pred_pairs == 0 && truth_pairs == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(pred_pairs + truth_pairs);
}

}  // namespace crimegnn
