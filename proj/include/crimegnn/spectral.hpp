#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "crimegnn/dense.hpp"
#include "crimegnn/error.hpp"
#include "crimegnn/graph.hpp"
#include "crimegnn/objectives.hpp"
#include "crimegnn/rng.hpp"

namespace crimegnn {

namespace detail {

inline std::vector<double> inverse_sqrt_degrees(const Graph& g) {
  std::vector<double> out(g.size(), 0.0);
  for (NodeId v = 0; v < g.size(); ++v) {
    if (g.degree(v) > 0.0) out[v] = 1.0 / std::sqrt(g.degree(v));
  }
  return out;
}

inline DenseMatrix normalized_adjacency_apply(const Graph& g, const std::vector<double>& inv_sqrt,
                                              const DenseMatrix& x) {
  DenseMatrix out(x.rows(), x.cols());
  for (NodeId u = 0; u < g.size(); ++u) {
    auto out_row = out.row(u);
    for (const auto& nb : g.neighbors(u)) {
      const double a = g.matrix_weight(u, nb) * inv_sqrt[u] * inv_sqrt[nb.node];
      const auto x_row = x.row(nb.node);
      for (std::size_t j = 0; j < x.cols(); ++j) out_row[j] += a * x_row[j];
    }
  }
  return out;
}

}  // namespace detail

// L_sym x with L_sym = I - D^{-1/2} A D^{-1/2}; isolated nodes use 0 for
// their D^{-1/2} entry.
inline DenseMatrix laplacian_apply(const Graph& g, const DenseMatrix& x) {
  if (x.rows() != g.size()) {
    throw std::invalid_argument("laplacian_apply: operand has " + std::to_string(x.rows()) +
                                " rows, graph has " + std::to_string(g.size()) + " nodes");
  }
  DenseMatrix out = detail::normalized_adjacency_apply(g, detail::inverse_sqrt_degrees(g), x);
  const auto xs = x.values();
  auto os = out.values();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = xs[i] - os[i];
  return out;
}

// Eigen-decomposition of a small dense symmetric matrix by cyclic Jacobi
// rotations. Returns eigenvalues (unsorted) and eigenvectors as columns.
inline std::pair<std::vector<double>, DenseMatrix> symmetric_eigen(DenseMatrix a) {
  const std::size_t n = a.rows();
  DenseMatrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a(i, i) * a(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off <= 1e-30 * std::max(diag, 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  // Ascending eigenvalues.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  std::vector<double> values(n);
  DenseMatrix sorted(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) sorted(i, j) = v(i, order[j]);
  }
  return {values, sorted};
}

struct EigenOptions {
  double tol = 1e-8;
  std::size_t max_iter = 5000;
  std::uint64_t seed = 0;
};

struct EigenResult {
  DenseMatrix vectors;         // n x k, orthonormal columns
  std::vector<double> values;  // ascending
  std::size_t iterations = 0;
  double worst_residual = 0.0;
};

namespace detail {

// Modified Gram-Schmidt in place. A column that collapses is replaced by a
// fresh random direction orthogonalized against the earlier ones.
inline void orthonormalize_columns(DenseMatrix& m, Rng& rng) {
  const std::size_t n = m.rows();
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (int attempt = 0;; ++attempt) {
      double original = 0.0;
      for (std::size_t i = 0; i < n; ++i) original += m(i, j) * m(i, j);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t p = 0; p < j; ++p) {
          double dot = 0.0;
          for (std::size_t i = 0; i < n; ++i) dot += m(i, p) * m(i, j);
          for (std::size_t i = 0; i < n; ++i) m(i, j) -= dot * m(i, p);
        }
      }
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) norm += m(i, j) * m(i, j);
      norm = std::sqrt(norm);
      if (norm > 1e-10 * std::sqrt(original) && norm > 1e-300) {
        for (std::size_t i = 0; i < n; ++i) m(i, j) /= norm;
        break;
      }
      if (attempt > 8) throw Error("could not build an orthonormal basis");
      for (std::size_t i = 0; i < n; ++i) m(i, j) = rng.normal();
    }
  }
}

}  // namespace detail

// The k smallest eigenpairs of L_sym, by block power iteration on
// M = 2I - L_sym (spectrum of L_sym lies in [0, 2]) with re-orthonormalization
// and a Rayleigh-Ritz rotation every step.
inline EigenResult bottom_k_eigenvectors(const Graph& g, std::size_t k,
                                         const EigenOptions& options = {}) {
  const std::size_t n = g.size();
  if (k < 1 || k > n) {
    throw Error("eigenvector count k = " + std::to_string(k) + " must lie in [1, " +
                std::to_string(n) + "]");
  }
  Rng rng(options.seed);
  const auto inv_sqrt = detail::inverse_sqrt_degrees(g);
  // M x = 2x - L x = x + D^{-1/2} A D^{-1/2} x
  auto apply_shifted = [&](const DenseMatrix& x) {
    DenseMatrix out = detail::normalized_adjacency_apply(g, inv_sqrt, x);
    const auto xs = x.values();
    auto os = out.values();
    for (std::size_t i = 0; i < os.size(); ++i) os[i] += xs[i];
    return out;
  };

  DenseMatrix basis(n, k);
  for (double& x : basis.values()) x = rng.normal();
  detail::orthonormalize_columns(basis, rng);

  EigenResult result;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 1; iter <= options.max_iter; ++iter) {
    const DenseMatrix image = apply_shifted(basis);
    auto [ritz_values, rotation] = symmetric_eigen(matmul_tn(basis, image));

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ritz_values[a] > ritz_values[b];
    });
    DenseMatrix sorted_rotation(k, k);
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i) sorted_rotation(i, j) = rotation(i, order[j]);
    }
    DenseMatrix vectors = matmul(basis, sorted_rotation);
    DenseMatrix images = matmul(image, sorted_rotation);

    worst = 0.0;
    std::vector<double> values(k);
    for (std::size_t j = 0; j < k; ++j) {
      const double mu = ritz_values[order[j]];
      values[j] = 2.0 - mu;
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        // L v - lambda v = (2v - Mv) - (2 - mu) v = mu v - Mv
        const double r = mu * vectors(i, j) - images(i, j);
        res += r * r;
      }
      worst = std::max(worst, std::sqrt(res) / std::max(1.0, std::abs(values[j])));
    }
    if (worst <= options.tol) {
      result.vectors = std::move(vectors);
      result.values = std::move(values);
      result.iterations = iter;
      result.worst_residual = worst;
      return result;
    }
    basis = std::move(images);
    detail::orthonormalize_columns(basis, rng);
  }
  throw ConvergenceError("eigensolver did not converge in " + std::to_string(options.max_iter) +
                             " iterations (worst scaled residual " + std::to_string(worst) + ")",
                         worst);
}

// Unit-length rows; all-zero rows stay zero.
inline DenseMatrix normalize_rows(DenseMatrix m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    double norm = 0.0;
    for (const double x : r) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& x : r) x /= norm;
    }
  }
  return m;
}

struct KMeansResult {
  std::vector<std::size_t> labels;
  DenseMatrix centroids;
  std::vector<double> inertia;  // after each Lloyd update
  std::size_t iterations = 0;
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace detail

// k-means++ seeding followed by Lloyd iterations. Nearest-centroid ties go to
// the lowest index; an empty cluster takes the point farthest from its own
// centroid.
inline KMeansResult kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iter = 100) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  if (k < 1) throw Error("k-means needs k >= 1");
  if (k > n) {
    throw Error("k-means: k = " + std::to_string(k) + " exceeds point count " +
                std::to_string(n));
  }
  Rng rng(seed);
  KMeansResult result;
  result.centroids = DenseMatrix(k, dim);

  std::vector<bool> chosen(n, false);
  auto place = [&](std::size_t c, std::size_t i) {
    chosen[i] = true;
    const auto src = points.row(i);
    std::copy(src.begin(), src.end(), result.centroids.row(c).begin());
  };
  place(0, static_cast<std::size_t>(rng.below(n)));
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) {
    nearest[i] = detail::squared_distance(points.row(i), result.centroids.row(0));
  }
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double running = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        running += nearest[i];
        if (nearest[i] > 0.0 && running > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (nearest[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a centroid; take the first unused one.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    place(c, pick);
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i],
                            detail::squared_distance(points.row(i), result.centroids.row(c)));
    }
  }

  std::vector<std::size_t>& labels = result.labels;
  labels.assign(n, k);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = detail::squared_distance(points.row(i), result.centroids.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double d = detail::squared_distance(points.row(i), result.centroids.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }

    std::vector<std::size_t> counts(k, 0);
    for (const auto l : labels) ++counts[l];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[labels[i]] < 2) continue;
        const double d = detail::squared_distance(points.row(i), result.centroids.row(labels[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --counts[labels[far]];
      labels[far] = c;
      counts[c] = 1;
      changed = true;
    }

    result.centroids.fill(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto centroid = result.centroids.row(labels[i]);
      const auto p = points.row(i);
      for (std::size_t j = 0; j < dim; ++j) centroid[j] += p[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (double& x : result.centroids.row(c)) x /= static_cast<double>(counts[c]);
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += detail::squared_distance(points.row(i), result.centroids.row(labels[i]));
    }
    result.inertia.push_back(inertia);
    result.iterations = iter + 1;
    if (!changed) break;
  }
  return result;
}

inline constexpr std::size_t kSpectralKMeansRestarts = 10;

struct SpectralResult {
  Partition partition;
  double modularity = 0.0;
  std::vector<double> eigenvalues;
};

// Bottom-k eigenvectors of L_sym, unit-normalized rows, k-means, canonical
// labels. Isolated nodes go to cluster 0.
inline SpectralResult spectral_clustering(const Graph& g, std::size_t k, std::uint64_t seed) {
  if (!(g.total_weight() > 0.0)) throw Error("graph has no edges (m == 0)");
  if (k < 1 || k > g.size()) {
    throw Error("k = " + std::to_string(k) + " must lie in [1, " + std::to_string(g.size()) + "]");
  }
  auto eig = bottom_k_eigenvectors(g, k, {.seed = seed});
  const DenseMatrix embedding = normalize_rows(eig.vectors);
  // Best of several k-means++ restarts by final inertia; a single run can
  // merge two well-separated groups.
  KMeansResult clusters;
  double best_inertia = std::numeric_limits<double>::infinity();
  Rng restart_seeds(seed ^ stable_hash("crimegnn/kmeans"));
  for (std::size_t r = 0; r < kSpectralKMeansRestarts; ++r) {
    auto run = kmeans(embedding, k, restart_seeds.next_u64());
    double inertia = 0.0;
    for (std::size_t i = 0; i < embedding.rows(); ++i) {
      inertia += detail::squared_distance(embedding.row(i), run.centroids.row(run.labels[i]));
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      clusters = std::move(run);
    }
  }
  // Isolated nodes join whichever cluster ends up labelled 0. Their embedding
  // rows are iteration noise, not zeros.
  auto isolated = [&](std::size_t i) { return !(g.degree(i) > 0.0); };
  std::size_t first = 0;
  while (first < embedding.rows() && isolated(first)) ++first;
  const std::size_t zero_label = first < embedding.rows() ? clusters.labels[first] : 0;
  for (std::size_t i = 0; i < embedding.rows(); ++i) {
    if (isolated(i)) clusters.labels[i] = zero_label;
  }
  SpectralResult result{Partition(clusters.labels), 0.0, std::move(eig.values)};
  result.modularity = modularity(g, result.partition);
  return result;
}

}  // namespace crimegnn
