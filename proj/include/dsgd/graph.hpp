#pragma once

// Base topology, per-round random Laplacians under independent link failures,
// and the spectral connectivity certificate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsgd/random.hpp"

namespace dsgd {

/// Undirected edge, always stored with first < second.
using Edge = std::pair<std::size_t, std::size_t>;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Connectivity threshold on the second-smallest Laplacian eigenvalue.
inline constexpr double kConnectivityTolerance = 1e-9;

class Graph {
 public:
  Graph() = default;

  Graph(std::size_t node_count, std::vector<Edge> edges, std::vector<Point2> positions = {})
      : node_count_(node_count), edges_(std::move(edges)), positions_(std::move(positions)) {
    if (node_count_ == 0) throw std::invalid_argument("graph: node count must be positive");
    if (!positions_.empty() && positions_.size() != node_count_)
      throw std::invalid_argument("graph: positions must cover every node");
    for (auto& [i, j] : edges_) {
      if (i == j) throw std::invalid_argument("graph: self-loop at node " + std::to_string(i));
      if (i >= node_count_ || j >= node_count_)
        throw std::invalid_argument("graph: edge endpoint out of range");
      if (i > j) std::swap(i, j);
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
      throw std::invalid_argument("graph: duplicate edge");
  }

  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<Point2>& positions() const noexcept { return positions_; }
  bool has_positions() const noexcept { return !positions_.empty(); }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(node_count_, 0);
    for (const auto& [i, j] : edges_) {
      ++deg[i];
      ++deg[j];
    }
    return deg;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    if (a.node_count_ != b.node_count_ || a.edges_ != b.edges_) return false;
    if (a.positions_.size() != b.positions_.size()) return false;
    for (std::size_t i = 0; i < a.positions_.size(); ++i)
      if (a.positions_[i].x != b.positions_[i].x || a.positions_[i].y != b.positions_[i].y)
        return false;
    return true;
  }

 private:
  std::size_t node_count_ = 1;
  std::vector<Edge> edges_;
  std::vector<Point2> positions_;
};

/// theta: the largest node degree.
inline std::size_t max_degree(const Graph& g) {
  const auto deg = g.degrees();
  return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
}

/// Union-find connectivity, independent of any spectral computation.
inline bool is_connected(std::size_t node_count, const std::vector<Edge>& edges) {
  std::vector<std::size_t> parent(node_count);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  std::size_t components = node_count;
  for (const auto& [i, j] : edges) {
    const auto ri = find(i);
    const auto rj = find(j);
    if (ri != rj) {
      parent[ri] = rj;
      --components;
    }
  }
  return components <= 1;
}

inline bool is_connected(const Graph& g) { return is_connected(g.node_count(), g.edges()); }

/// Random geometric graph: n points uniform on the unit square, edge {i,j}
/// iff their Euclidean distance is strictly below `radius`. `attempt`
/// selects an independent placement under the same seed.
inline Graph build_geometric_graph(std::size_t n, double radius, std::uint64_t seed,
                                   std::uint64_t attempt = 0) {
  if (n == 0) throw std::invalid_argument("geometric graph: n must be >= 1");
  if (!(radius > 0.0) || radius > std::sqrt(2.0))
    throw std::invalid_argument("geometric graph: radius must lie in (0, sqrt(2)]");
  Stream stream(StreamKey{seed, 0, Purpose::graph, attempt, 0});
  std::vector<Point2> pos(n);
  for (auto& p : pos) {
    p.x = stream.uniform();
    p.y = stream.uniform();
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::hypot(pos[i].x - pos[j].x, pos[i].y - pos[j].y) < radius) edges.emplace_back(i, j);
  return Graph(n, std::move(edges), std::move(pos));
}

struct GeometricGraphFit {
  Graph graph;
  double radius = 0.0;
  std::uint64_t attempt = 0;
};

/// Bisects the radius until the geometric graph has exactly `target_edges`
/// edges and is connected; redraws the placement (next attempt) when the
/// target is only reachable by a disconnected layout.
inline GeometricGraphFit build_geometric_graph_with_edges(std::size_t n, std::size_t target_edges,
                                                          std::uint64_t seed,
                                                          std::uint64_t max_attempts = 10000) {
  const std::size_t max_edges = n * (n - 1) / 2;
  if (target_edges > max_edges)
    throw std::invalid_argument("geometric graph: target edge count exceeds n(n-1)/2");
  if (n > 1 && target_edges < n - 1)
    throw std::invalid_argument("geometric graph: too few edges for a connected graph");
  for (std::uint64_t attempt = 0; attempt < max_attempts; ++attempt) {
    double lo = 1e-12;
    double hi = std::sqrt(2.0);
    std::optional<Graph> hit;
    double hit_radius = 0.0;
    for (int iter = 0; iter < 200 && !hit; ++iter) {
      const double mid = 0.5 * (lo + hi);
      Graph g = build_geometric_graph(n, mid, seed, attempt);
      if (g.edge_count() == target_edges) {
        hit = std::move(g);
        hit_radius = mid;
      } else if (g.edge_count() < target_edges) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    if (hit && is_connected(*hit)) return {std::move(*hit), hit_radius, attempt};
  }
  throw std::runtime_error("geometric graph: no connected layout with the target edge count");
}

/// Laplacian of an edge set: degree on the diagonal, -1 per edge.
inline Eigen::MatrixXd laplacian_of(std::size_t node_count, const std::vector<Edge>& edges) {
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(node_count),
                                              static_cast<Eigen::Index>(node_count));
  for (const auto& [i, j] : edges) {
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    lap(a, b) -= 1.0;
    lap(b, a) -= 1.0;
    lap(a, a) += 1.0;
    lap(b, b) += 1.0;
  }
  return lap;
}

inline Eigen::MatrixXd graph_laplacian(const Graph& g) { return laplacian_of(g.node_count(), g.edges()); }

class FailureModel {
 public:
  explicit FailureModel(double p_fail = 0.0) : p_fail_(p_fail) {
    if (!(p_fail >= 0.0 && p_fail <= 1.0))
      throw std::invalid_argument("failure model: p_fail must lie in [0, 1]");
  }
  double p_fail() const noexcept { return p_fail_; }

 private:
  double p_fail_;
};

struct LaplacianSample {
  std::uint64_t round = 0;
  std::vector<Edge> active_edges;
  Eigen::MatrixXd laplacian;
};

/// Writes the surviving base edges into `out` (cleared first). Each edge is
/// kept with probability 1 - p_fail; one uniform draw per base edge, in
/// edge order, so the draw count never depends on earlier outcomes.
inline void sample_active_edges(const Graph& g, const FailureModel& fm, Stream& stream,
                                std::vector<Edge>& out) {
  out.clear();
  const double p = fm.p_fail();
  for (const auto& e : g.edges())
    if (!stream.bernoulli(p)) out.push_back(e);
}

inline LaplacianSample sample_laplacian(const Graph& g, const FailureModel& fm, Stream& stream,
                                        std::uint64_t round = 0) {
  LaplacianSample s;
  s.round = round;
  sample_active_edges(g, fm, stream, s.active_edges);
  s.laplacian = laplacian_of(g.node_count(), s.active_edges);
  return s;
}

/// Exact expectation of the sampled Laplacian: (1 - p_fail) L(G).
inline Eigen::MatrixXd mean_laplacian(const Graph& g, const FailureModel& fm) {
  return (1.0 - fm.p_fail()) * graph_laplacian(g);
}

/// Second-smallest eigenvalue of a symmetric Laplacian (0 for N = 1).
inline double algebraic_connectivity(const Eigen::MatrixXd& lap) {
  if (lap.rows() != lap.cols()) throw std::invalid_argument("algebraic_connectivity: matrix not square");
  const double scale = std::max(1.0, lap.cwiseAbs().maxCoeff());
  if ((lap - lap.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("algebraic_connectivity: matrix not symmetric");
  if (lap.rows() < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues()(1));
}

inline bool connected_on_average(const Graph& g, const FailureModel& fm) {
  return algebraic_connectivity(mean_laplacian(g, fm)) > kConnectivityTolerance;
}

/// W_k = I - beta_k L(k), applied blockwise to the stacked iterate.
struct MixingOperator {
  double beta = 0.0;
  LaplacianSample sample;
  Eigen::MatrixXd matrix;
};

inline MixingOperator make_mixing_operator(LaplacianSample sample, double beta) {
  MixingOperator mix;
  mix.beta = beta;
  const auto n = sample.laplacian.rows();
  mix.matrix = Eigen::MatrixXd::Identity(n, n) - beta * sample.laplacian;
  mix.sample = std::move(sample);
  return mix;
}

// Edge-list text format:
//   N <node_count>
//   i j          one line per edge
//   P i x y      optional node position
inline void write_edge_list(std::ostream& os, const Graph& g) {
  os << "N " << g.node_count() << '\n';
  for (const auto& [i, j] : g.edges()) os << i << ' ' << j << '\n';
  if (g.has_positions()) {
    char buf[96];
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      std::snprintf(buf, sizeof buf, "P %zu %.17g %.17g\n", i, g.positions()[i].x, g.positions()[i].y);
      os << buf;
    }
  }
}

inline Graph read_edge_list(std::istream& is) {
  std::string line;
  std::optional<std::size_t> n;
  std::vector<Edge> edges;
  std::vector<std::pair<std::size_t, Point2>> pos;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    auto fail = [&] { throw std::runtime_error("edge list: malformed line " + std::to_string(line_no)); };
    if (line[first] == 'N') {
      std::string tag;
      std::size_t count = 0;
      if (!(ls >> tag >> count)) fail();
      n = count;
    } else if (line[first] == 'P') {
      std::string tag;
      std::size_t i = 0;
      Point2 p;
      if (!(ls >> tag >> i >> p.x >> p.y)) fail();
      pos.emplace_back(i, p);
    } else {
      long long i = 0, j = 0;
      if (!(ls >> i >> j) || i < 0 || j < 0) fail();
      edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  if (!n) throw std::runtime_error("edge list: missing 'N <node_count>' header");
  std::vector<Point2> positions;
  if (!pos.empty()) {
    if (pos.size() != *n) throw std::runtime_error("edge list: positions must cover every node");
    positions.resize(*n);
    std::vector<bool> seen(*n, false);
    for (const auto& [i, p] : pos) {
      if (i >= *n || seen[i]) throw std::runtime_error("edge list: bad position index");
      seen[i] = true;
      positions[i] = p;
    }
  }
  return Graph(*n, std::move(edges), std::move(positions));
}

}  // namespace dsgd
