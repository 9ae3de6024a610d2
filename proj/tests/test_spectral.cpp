#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "crimegnn/io.hpp"
#include "crimegnn/spectral.hpp"
#include "oracles.hpp"

using namespace crimegnn;

namespace {

double residual(const Graph& g, const EigenResult& r, std::size_t j) {
  DenseMatrix v(g.size(), 1);
  for (std::size_t i = 0; i < g.size(); ++i) v(i, 0) = r.vectors(i, j);
  const DenseMatrix lv = laplacian_apply(g, v);
  double sq = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = lv(i, 0) - r.values[j] * v(i, 0);
    sq += d * d;
  }
  return std::sqrt(sq);
}

void expect_orthonormal(const DenseMatrix& v) {
  for (std::size_t a = 0; a < v.cols(); ++a) {
    for (std::size_t b = 0; b < v.cols(); ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < v.rows(); ++i) dot += v(i, a) * v(i, b);
      EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-9);
    }
  }
}

Graph cycle(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i) e.push_back({i, (i + 1) % n});
  return build_graph(n, e);
}

Graph complete(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) e.push_back({i, j});
  }
  return build_graph(n, e);
}

}  // namespace

TEST(Laplacian, KernelVector) {
  DenseMatrix x(3, 1);
  x.fill(std::sqrt(2.0));
  const DenseMatrix r = laplacian_apply(fixture("triangle").graph, x);
  for (const double v : r.values()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Laplacian, MatchesDenseOracle) {
  std::mt19937_64 gen(41);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 15; ++t) {
    const std::size_t n = 4 + 3 * t;
    auto rg = oracle::random_graph(gen, n, 0.2, t % 2 == 0, t % 3 == 0);
    // Add an isolated node at the end.
    const Graph g = build_graph(n + 1, rg.edges);
    const auto l = oracle::dense_laplacian(oracle::dense_adjacency(n + 1, rg.edges));
    DenseMatrix x(n + 1, 2);
    for (double& v : x.values()) v = normal(gen);
    const DenseMatrix r = laplacian_apply(g, x);
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t c = 0; c < 2; ++c) {
        double expected = 0.0;
        for (std::size_t j = 0; j <= n; ++j) expected += l[i][j] * x(j, c);
        EXPECT_NEAR(r(i, c), expected, 1e-10);
      }
    }
  }
  EXPECT_THROW(laplacian_apply(fixture("triangle").graph, DenseMatrix(2, 1)),
               std::invalid_argument);
}

TEST(SymmetricEigen, Reconstructs) {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> normal;
  DenseMatrix a(5, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i; j < 5; ++j) a(i, j) = a(j, i) = normal(gen);
  }
  const auto [values, vectors] = symmetric_eigen(a);
  EXPECT_TRUE(std::is_sorted(values.begin(), values.end()));
  expect_orthonormal(vectors);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < 5; ++c) s += vectors(i, c) * values[c] * vectors(j, c);
      EXPECT_NEAR(s, a(i, j), 1e-12);
    }
  }
}

TEST(BottomK, CompleteGraphSpectrum) {
  const auto r = bottom_k_eigenvectors(fixture("triangle").graph, 3, {.seed = 1});
  ASSERT_EQ(r.values.size(), 3u);
  EXPECT_NEAR(r.values[0], 0.0, 1e-8);
  EXPECT_NEAR(r.values[1], 1.5, 1e-8);
  EXPECT_NEAR(r.values[2], 1.5, 1e-8);
  const auto k6 = bottom_k_eigenvectors(complete(6), 3, {.seed = 2});
  EXPECT_NEAR(k6.values[1], 6.0 / 5.0, 1e-8);
  EXPECT_NEAR(k6.values[2], 6.0 / 5.0, 1e-8);
}

TEST(BottomK, SingleEdge) {
  const auto r = bottom_k_eigenvectors(build_graph(2, {{0, 1}}), 2, {.seed = 0});
  EXPECT_NEAR(r.values[0], 0.0, 1e-8);
  EXPECT_NEAR(r.values[1], 2.0, 1e-8);
}

TEST(BottomK, CycleSpectrum) {
  // L_sym of C_n has eigenvalues 1 - cos(2 pi j / n).
  const std::size_t n = 12;
  std::vector<double> expected;
  for (std::size_t j = 0; j < n; ++j) expected.push_back(1.0 - std::cos(2 * std::numbers::pi * j / n));
  std::sort(expected.begin(), expected.end());
  const Graph g = cycle(n);
  const auto r = bottom_k_eigenvectors(g, 5, {.seed = 3});
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(r.values[j], expected[j], 1e-8);
}

TEST(BottomK, TwoComponentsKernel) {
  const Graph g = fixture("two_triangles").graph;
  const auto r = bottom_k_eigenvectors(g, 2, {.seed = 4});
  EXPECT_NEAR(r.values[0], 0.0, 1e-8);
  EXPECT_NEAR(r.values[1], 0.0, 1e-8);
  // Each vector is constant on each component (degrees are equal).
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_NEAR(r.vectors(0, j), r.vectors(2, j), 1e-7);
    EXPECT_NEAR(r.vectors(3, j), r.vectors(5, j), 1e-7);
  }
}

TEST(BottomK, ResidualsOrthonormalityAndRange) {
  std::mt19937_64 gen(43);
  for (int t = 0; t < 8; ++t) {
    const std::size_t n = 15 + 5 * t;
    auto rg = oracle::random_graph(gen, n, 0.2, t % 2 == 0, false);
    const Graph g = build_graph(n, rg.edges);
    const std::size_t k = 2 + t % 4;
    const EigenOptions opt{.tol = 1e-8, .max_iter = 5000, .seed = static_cast<std::uint64_t>(t)};
    const auto r = bottom_k_eigenvectors(g, k, opt);
    EXPECT_TRUE(std::is_sorted(r.values.begin(), r.values.end()));
    expect_orthonormal(r.vectors);
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_LE(residual(g, r, j), opt.tol * std::max(1.0, r.values[j]));
      EXPECT_GE(r.values[j], -opt.tol);
      EXPECT_LE(r.values[j], 2.0 + opt.tol);
    }
    EXPECT_LE(r.worst_residual, opt.tol * 2.0);
  }
}

TEST(BottomK, DeterministicAndValidated) {
  const Graph g = fixture("k3_3cliques").graph;
  const auto a = bottom_k_eigenvectors(g, 3, {.seed = 9});
  const auto b = bottom_k_eigenvectors(g, 3, {.seed = 9});
  EXPECT_EQ(a.vectors, b.vectors);
  EXPECT_EQ(a.values, b.values);
  EXPECT_THROW(bottom_k_eigenvectors(g, 0), Error);
  EXPECT_THROW(bottom_k_eigenvectors(g, 10), Error);
}

TEST(BottomK, ReportsNonConvergence) {
  // Path graphs have a tiny spectral gap; two iterations cannot converge.
  std::vector<Edge> e;
  for (NodeId i = 0; i + 1 < 60; ++i) e.push_back({i, i + 1});
  try {
    bottom_k_eigenvectors(build_graph(60, e), 3, {.tol = 1e-12, .max_iter = 2, .seed = 0});
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& err) {
    EXPECT_GT(err.worst_residual(), 1e-12);
  }
}

TEST(NormalizeRows, UnitRowsAndZeroRows) {
  DenseMatrix m(3, 2);
  m(0, 0) = 3, m(0, 1) = 4;
  m(2, 1) = -0.5;
  const DenseMatrix r = normalize_rows(m);
  EXPECT_NEAR(r(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(r(0, 1), 0.8, 1e-15);
  EXPECT_EQ(r(1, 0), 0.0);
  EXPECT_EQ(r(1, 1), 0.0);
  EXPECT_NEAR(r(2, 1), -1.0, 1e-15);
}

TEST(KMeans, SeparatedPairs) {
  DenseMatrix p(4, 1);
  p(0, 0) = 0.0, p(1, 0) = 0.1, p(2, 0) = 10.0, p(3, 0) = 10.1;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(p, 2, seed);
    EXPECT_EQ(r.labels[0], r.labels[1]);
    EXPECT_EQ(r.labels[2], r.labels[3]);
    EXPECT_NE(r.labels[0], r.labels[2]);
  }
}

TEST(KMeans, KEqualsN) {
  DenseMatrix p(5, 2);
  for (std::size_t i = 0; i < 5; ++i) p(i, 0) = static_cast<double>(i * i);
  const auto r = kmeans(p, 5, 1);
  auto labels = r.labels;
  std::sort(labels.begin(), labels.end());
  EXPECT_EQ(labels, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(KMeans, DuplicatedPointsSingleCluster) {
  DenseMatrix p(4, 2);
  for (std::size_t i = 0; i < 4; ++i) p(i, 0) = 1.5, p(i, 1) = -2.0;
  const auto r = kmeans(p, 1, 0);
  EXPECT_EQ(r.labels, (std::vector<std::size_t>(4, 0)));
  EXPECT_DOUBLE_EQ(r.centroids(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(r.centroids(0, 1), -2.0);
}

TEST(KMeans, DuplicatesWithMoreClustersStayNonEmpty) {
  DenseMatrix p(6, 1);
  for (std::size_t i = 0; i < 6; ++i) p(i, 0) = i < 4 ? 1.0 : 2.0;
  const auto r = kmeans(p, 3, 0);
  std::vector<std::size_t> sizes(3, 0);
  for (const auto l : r.labels) ++sizes[l];
  for (const auto s : sizes) EXPECT_GT(s, 0u);
}

TEST(KMeans, InertiaNonIncreasing) {
  std::mt19937_64 gen(44);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 10; ++t) {
    DenseMatrix p(80, 3);
    for (double& v : p.values()) v = normal(gen);
    const auto r = kmeans(p, 4 + t % 3, t);
    for (std::size_t i = 1; i < r.inertia.size(); ++i) {
      EXPECT_LE(r.inertia[i], r.inertia[i - 1] + 1e-12);
    }
  }
}

TEST(KMeans, Errors) {
  EXPECT_THROW(kmeans(DenseMatrix(2, 1), 3, 0), Error);
  EXPECT_THROW(kmeans(DenseMatrix(2, 1), 0, 0), Error);
}

TEST(SpectralClustering, Fixtures) {
  const auto tt = spectral_clustering(fixture("two_triangles").graph, 2, 0);
  EXPECT_NEAR(tt.modularity, 0.5, 1e-12);
  EXPECT_EQ(tt.partition, *fixture("two_triangles").truth);
  const auto bb = spectral_clustering(fixture("barbell6").graph, 2, 0);
  EXPECT_NEAR(bb.modularity, 5.0 / 14.0, 1e-12);
  EXPECT_EQ(bb.partition, *fixture("barbell6").truth);
  const auto ring = spectral_clustering(fixture("k3_3cliques").graph, 3, 0);
  EXPECT_EQ(ring.partition, *fixture("k3_3cliques").truth);
}

TEST(SpectralClustering, PlantedRecovery) {
  const auto pg = planted_partition({120, 4, 0.3, 0.02, 42});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = spectral_clustering(pg.graph, 4, seed);
    EXPECT_GE(pairwise_f1(r.partition, pg.truth), 0.95) << "seed " << seed;
    EXPECT_NEAR(r.modularity, modularity(pg.graph, r.partition), 1e-15);
  }
}

TEST(SpectralClustering, IsolatedNodesGoToClusterZero) {
  // Nodes 6 and 7 have no edges; their embedding rows are zero.
  const Graph g = build_graph(8, fixture("two_triangles").graph.edges());
  const auto r = spectral_clustering(g, 2, 0);
  EXPECT_EQ(r.partition[6], r.partition[0]);
  EXPECT_EQ(r.partition[7], r.partition[0]);
}

TEST(SpectralClustering, DeterministicAndValidated) {
  const auto pg = planted_partition({60, 3, 0.4, 0.05, 8});
  EXPECT_EQ(spectral_clustering(pg.graph, 3, 5).partition,
            spectral_clustering(pg.graph, 3, 5).partition);
  EXPECT_THROW(spectral_clustering(pg.graph, 0, 0), Error);
  EXPECT_THROW(spectral_clustering(pg.graph, 61, 0), Error);
  EXPECT_THROW(spectral_clustering(build_graph(3, {}), 1, 0), Error);
}
