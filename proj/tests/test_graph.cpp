#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "dsgd/graph.hpp"
#include "test_support.hpp"

using namespace dsgd;
using namespace testing_support;

TEST(Graph, RejectsMalformedEdgeSets) {
  EXPECT_THROW(Graph(0, {}), std::invalid_argument);
  EXPECT_THROW(Graph(3, {{1, 1}}), std::invalid_argument);
  EXPECT_THROW(Graph(3, {{0, 3}}), std::invalid_argument);
  EXPECT_THROW(Graph(3, {{0, 1}, {1, 0}}), std::invalid_argument);
  EXPECT_THROW(Graph(3, {{0, 1}}, {{0, 0}}), std::invalid_argument);
  EXPECT_NO_THROW(Graph(1, {}));
}

TEST(Graph, EdgesAreNormalisedAndSorted) {
  Graph g(4, {{3, 2}, {1, 0}, {2, 0}});
  const std::vector<Edge> want{{0, 1}, {0, 2}, {2, 3}};
  EXPECT_EQ(g.edges(), want);
  EXPECT_EQ(g.degrees(), (std::vector<std::size_t>{2, 1, 2, 1}));
  EXPECT_EQ(max_degree(g), 2u);
}

TEST(Laplacian, MatchesDegreeMinusAdjacency) {
  const Graph g = build_geometric_graph(12, 0.45, 9);
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(12, 12);
  for (const auto& [i, j] : g.edges()) adj(i, j) = adj(j, i) = 1.0;
  const Eigen::MatrixXd oracle = Eigen::MatrixXd(adj.rowwise().sum().asDiagonal()) - adj;
  const Eigen::MatrixXd lap = graph_laplacian(g);
  EXPECT_EQ(lap, oracle);
  EXPECT_LT((lap * Eigen::VectorXd::Ones(12)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(lap, lap.transpose());
}

TEST(AlgebraicConnectivity, KnownSpectra) {
  EXPECT_NEAR(algebraic_connectivity(graph_laplacian(path_graph(2))), 2.0, 1e-12);
  for (std::size_t n : {3u, 5u, 8u}) {
    EXPECT_NEAR(algebraic_connectivity(graph_laplacian(complete_graph(n))), static_cast<double>(n), 1e-10);
    EXPECT_NEAR(algebraic_connectivity(graph_laplacian(cycle_graph(n))),
                2.0 - 2.0 * std::cos(2.0 * std::numbers::pi / static_cast<double>(n)), 1e-10);
    EXPECT_NEAR(algebraic_connectivity(graph_laplacian(path_graph(n))),
                2.0 - 2.0 * std::cos(std::numbers::pi / static_cast<double>(n)), 1e-10);
  }
  std::vector<Edge> star;
  for (std::size_t i = 1; i < 6; ++i) star.emplace_back(0, i);
  EXPECT_NEAR(algebraic_connectivity(graph_laplacian(Graph(6, star))), 1.0, 1e-12);
  EXPECT_EQ(algebraic_connectivity(Eigen::MatrixXd::Zero(1, 1)), 0.0);
}

TEST(AlgebraicConnectivity, RejectsNonSymmetricInput) {
  Eigen::MatrixXd m(2, 2);
  m << 1, -1, 0, 0;
  EXPECT_THROW(algebraic_connectivity(m), std::invalid_argument);
  EXPECT_THROW(algebraic_connectivity(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

// Every edge subset on n <= 4 nodes: spectral and union-find connectivity
// agree with breadth-first search.
TEST(AlgebraicConnectivity, ExhaustiveSmallGraphs) {
  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<Edge> all;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) all.emplace_back(i, j);
    for (std::uint32_t mask = 0; mask < (1u << all.size()); ++mask) {
      std::vector<Edge> e;
      for (std::size_t b = 0; b < all.size(); ++b)
        if (mask & (1u << b)) e.emplace_back(all[b]);
      const bool want = bfs_connected(n, e);
      const Graph g(n, e);
      EXPECT_EQ(is_connected(g), want) << "n=" << n << " mask=" << mask;
      if (n > 1) EXPECT_EQ(algebraic_connectivity(graph_laplacian(g)) > kConnectivityTolerance, want);
    }
  }
}

TEST(AlgebraicConnectivity, DisjointUnionIsZero) {
  const Graph g(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  EXPECT_LT(algebraic_connectivity(graph_laplacian(g)), 1e-12);
  EXPECT_FALSE(connected_on_average(g, FailureModel(0.0)));
}

TEST(GeometricGraph, EdgesFollowTheRadiusRule) {
  const Graph g = build_geometric_graph(15, 0.3, 4);
  ASSERT_TRUE(g.has_positions());
  std::vector<Edge> oracle;
  for (std::size_t i = 0; i < 15; ++i)
    for (std::size_t j = i + 1; j < 15; ++j) {
      const double dx = g.positions()[i].x - g.positions()[j].x;
      const double dy = g.positions()[i].y - g.positions()[j].y;
      if (std::sqrt(dx * dx + dy * dy) < 0.3) oracle.emplace_back(i, j);
    }
  EXPECT_EQ(g.edges(), oracle);
  for (const auto& p : g.positions()) {
    EXPECT_GE(p.x, 0.0);
    EXPECT_LT(p.x, 1.0);
    EXPECT_GE(p.y, 0.0);
    EXPECT_LT(p.y, 1.0);
  }
  EXPECT_THROW(build_geometric_graph(5, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(build_geometric_graph(5, 2.0, 1), std::invalid_argument);
  EXPECT_EQ(build_geometric_graph(5, std::sqrt(2.0), 1).edge_count(), 10u);
}

TEST(GeometricGraph, EdgeCountTargetIsHitAndConnected) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto fit = build_geometric_graph_with_edges(10, 23, seed);
    EXPECT_EQ(fit.graph.edge_count(), 23u);
    EXPECT_TRUE(is_connected(fit.graph));
    EXPECT_EQ(build_geometric_graph(10, fit.radius, seed, fit.attempt), fit.graph);
    EXPECT_EQ(build_geometric_graph_with_edges(10, 23, seed).graph, fit.graph);
  }
  EXPECT_THROW(build_geometric_graph_with_edges(4, 7, 1), std::invalid_argument);
  EXPECT_THROW(build_geometric_graph_with_edges(5, 3, 1), std::invalid_argument);
}

TEST(FailureModel, ValidatesProbability) {
  EXPECT_THROW(FailureModel(-0.1), std::invalid_argument);
  EXPECT_THROW(FailureModel(1.5), std::invalid_argument);
  EXPECT_NO_THROW(FailureModel(1.0));
}

TEST(SampleLaplacian, ExtremesAndSubsetProperty) {
  const Graph g = complete_graph(6);
  Stream s(StreamKey{1, 0, Purpose::test, 0, 0});
  EXPECT_EQ(sample_laplacian(g, FailureModel(0.0), s).laplacian, graph_laplacian(g));
  EXPECT_EQ(sample_laplacian(g, FailureModel(1.0), s).laplacian, Eigen::MatrixXd::Zero(6, 6));
  for (int t = 0; t < 200; ++t) {
    const auto smp = sample_laplacian(g, FailureModel(0.5), s, static_cast<std::uint64_t>(t));
    EXPECT_EQ(smp.round, static_cast<std::uint64_t>(t));
    for (const auto& e : smp.active_edges)
      EXPECT_TRUE(std::binary_search(g.edges().begin(), g.edges().end(), e));
    EXPECT_LT((smp.laplacian * Eigen::VectorXd::Ones(6)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(SampleLaplacian, MonteCarloMeanMatchesClosedForm) {
  const Graph g = build_geometric_graph_with_edges(8, 14, 5).graph;
  const double p = 0.3;
  const int draws = 20000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(8, 8), sum_sq = Eigen::MatrixXd::Zero(8, 8);
  for (int t = 0; t < draws; ++t) {
    Stream s(StreamKey{2, 0, Purpose::network, 0, static_cast<std::uint64_t>(t)});
    const auto l = sample_laplacian(g, FailureModel(p), s).laplacian;
    sum += l;
    sum_sq += l.cwiseProduct(l);
  }
  const Eigen::MatrixXd mean = sum / draws;
  const Eigen::MatrixXd var = (sum_sq / draws - mean.cwiseProduct(mean)) * draws / (draws - 1.0);
  const Eigen::MatrixXd target = mean_laplacian(g, FailureModel(p));
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < 8; ++j) {
      const double se = std::sqrt(var(i, j) / draws);
      EXPECT_LE(std::abs(mean(i, j) - target(i, j)), 4 * se + 1e-15) << i << "," << j;
    }
}

TEST(MeanLaplacian, SpectrumScalesWithSurvivalProbability) {
  const Graph g = build_geometric_graph_with_edges(10, 23, 1).graph;
  const double base = algebraic_connectivity(graph_laplacian(g));
  for (double p : {0.0, 0.1, 0.5, 0.9}) {
    EXPECT_NEAR(algebraic_connectivity(mean_laplacian(g, FailureModel(p))), (1 - p) * base, 1e-10);
    EXPECT_TRUE(connected_on_average(g, FailureModel(p)));
  }
  EXPECT_FALSE(connected_on_average(g, FailureModel(1.0)));
}

TEST(MixingOperator, DoublyStochasticAndSymmetric) {
  const Graph g = build_geometric_graph_with_edges(10, 23, 1).graph;
  Stream s(StreamKey{1, 0, Purpose::test, 0, 0});
  const double beta = 1.0 / static_cast<double>(max_degree(g));
  const auto mix = make_mixing_operator(sample_laplacian(g, FailureModel(0.5), s), beta);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(10);
  EXPECT_LT((mix.matrix * ones - ones).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((ones.transpose() * mix.matrix - ones.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(mix.matrix, mix.matrix.transpose());
  // With beta <= 1/theta every entry is nonnegative.
  EXPECT_GE(mix.matrix.minCoeff(), -1e-15);
}

TEST(EdgeList, RoundTripsWithPositions) {
  const Graph g = build_geometric_graph(9, 0.5, 3);
  std::stringstream ss;
  write_edge_list(ss, g);
  EXPECT_EQ(read_edge_list(ss), g);
  std::stringstream plain("# comment\nN 3\n0 1\n2 1\n");
  EXPECT_EQ(read_edge_list(plain), Graph(3, {{0, 1}, {1, 2}}));
  std::stringstream bad("0 1\n");
  EXPECT_THROW(read_edge_list(bad), std::runtime_error);
  std::stringstream garbage("N 3\n0 x\n");
  EXPECT_THROW(read_edge_list(garbage), std::runtime_error);
}
