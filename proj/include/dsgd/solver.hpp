#pragma once

// Distributed stochastic gradient iteration
//   x_i(k+1) = x_i(k) - beta_k sum_{j in Omega_i(k)} (x_i(k) - x_j(k))
//                     - alpha_k (grad f_i(x_i(k)) + v_i(k))
// with diminishing schedules, plus the centralized SGD baseline.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsgd/analysis.hpp"
#include "dsgd/graph.hpp"
#include "dsgd/objective.hpp"
#include "dsgd/random.hpp"
#include "dsgd/state.hpp"

namespace dsgd {

/// alpha_k = alpha0 / (k + k0), beta_k = beta0 / (k + 1)^nu.
struct Schedules {
  double alpha0 = 1.0;
  double k0 = 1.0;
  double beta0 = 1.0;
  double nu = 0.5;

  void validate() const {
    if (!(alpha0 > 0.0)) throw std::invalid_argument("schedules: alpha0 must be > 0");
    if (!(k0 >= 1.0)) throw std::invalid_argument("schedules: k0 must be >= 1");
    if (!(beta0 > 0.0)) throw std::invalid_argument("schedules: beta0 must be > 0");
    if (!(nu >= 0.0 && nu <= 0.5)) throw std::invalid_argument("schedules: nu must lie in [0, 1/2]");
  }
};

inline double alpha_at(const Schedules& s, std::uint64_t k) { return s.alpha0 / (static_cast<double>(k) + s.k0); }

inline double beta_at(const Schedules& s, std::uint64_t k) {
  return s.nu == 0.0 ? s.beta0 : s.beta0 / std::pow(static_cast<double>(k) + 1.0, s.nu);
}

/// The O(1/k) guarantee needs alpha0 > 2N/mu; below it the rate degrades to O(ln k / k).
inline bool rate_condition_met(const Schedules& s, std::size_t node_count, double mu) {
  return mu > 0.0 && s.alpha0 > 2.0 * static_cast<double>(node_count) / mu;
}

/// k0 = 1 unless the rate condition holds, then ceil(alpha0 L) so alpha_0 L <= 1.
inline double default_k0(double alpha0, std::size_t node_count, const CurvatureBounds& cb) {
  Schedules probe;
  probe.alpha0 = alpha0;
  return rate_condition_met(probe, node_count, cb.mu) ? std::max(1.0, std::ceil(alpha0 * cb.lip)) : 1.0;
}

/// Beyond this iterate norm a run is considered diverged.
inline constexpr double kDivergenceNorm = 1e12;

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(std::uint64_t round, const std::string& what)
      : std::runtime_error("diverged at round " + std::to_string(round) + ": " + what), round_(round) {}
  std::uint64_t round() const noexcept { return round_; }

 private:
  std::uint64_t round_;
};

namespace detail {

inline void check_divergence(const Eigen::MatrixXd& x, std::uint64_t round) {
  if (!x.allFinite()) throw DivergenceError(round, "non-finite iterate");
  const double norm = x.norm();
  if (norm > kDivergenceNorm) throw DivergenceError(round, "iterate norm " + std::to_string(norm) + " exceeds 1e12");
}

/// One synchronous round. Every gradient and every neighbour difference is
/// read from `x` (round k); the result goes to `out`.
inline void advance(const Eigen::MatrixXd& x, const std::vector<Edge>& active, double beta, double alpha,
                    const LossModel& loss, const NoiseOracle& noise, const ReplicateStreams& streams,
                    std::uint64_t round, Eigen::VectorXd& grad, Eigen::MatrixXd& out) {
  const auto n = x.cols();
  out.resize(x.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Stream s = streams.gradient(static_cast<std::uint64_t>(i), round);
    stochastic_gradient_into(loss, static_cast<std::size_t>(i), x.col(i), noise, s, grad);
    out.col(i) = x.col(i) - alpha * grad;
  }
  for (const auto& [i, j] : active) {
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    for (Eigen::Index c = 0; c < x.rows(); ++c) {
      const double d = beta * (x(c, a) - x(c, b));
      out(c, a) -= d;
      out(c, b) += d;
    }
  }
}

}  // namespace detail

/// x(k+1) = W_k x(k) - alpha_k (grad F(x(k)) + v(k)).
inline StackedState distributed_step(const StackedState& state, const MixingOperator& mix, const LossModel& loss,
                                     const NoiseOracle& noise, const Schedules& schedules,
                                     const ReplicateStreams& streams) {
  const double beta = beta_at(schedules, state.round);
  if (std::abs(mix.beta - beta) > 1e-15 * std::max(1.0, beta))
    throw std::invalid_argument("distributed_step: mixing weight does not match beta_k");
  if (state.node_count() != loss.node_count() || state.dimension() != loss.dimension())
    throw std::invalid_argument("distributed_step: state shape does not match the loss model");
  if (static_cast<std::size_t>(mix.sample.laplacian.rows()) != state.node_count())
    throw std::invalid_argument("distributed_step: mixing operator size mismatch");
  StackedState next;
  Eigen::VectorXd grad(state.nodes.rows());
  detail::advance(state.nodes, mix.sample.active_edges, beta, alpha_at(schedules, state.round), loss, noise,
                  streams, state.round, grad, next.nodes);
  next.round = state.round + 1;
  detail::check_divergence(next.nodes, next.round);
  return next;
}

struct SolverConfig {
  Graph graph;
  FailureModel failure;
  std::shared_ptr<const LossModel> loss;
  NoiseOracle noise;
  Schedules schedules;
  std::optional<Eigen::MatrixXd> initial;  // m x N; zeros when absent
  std::uint64_t horizon = 1;
  std::uint64_t seed = 1;
  std::size_t replicates = 1;
  Eigen::VectorXd optimum;
  std::uint64_t config_hash = 0;

  void validate() const {
    if (!loss) throw std::invalid_argument("solver config: missing loss model");
    if (horizon < 1) throw std::invalid_argument("solver config: horizon must be >= 1");
    if (replicates < 1) throw std::invalid_argument("solver config: replicate count must be >= 1");
    if (graph.node_count() != loss->node_count())
      throw std::invalid_argument("solver config: graph and dataset disagree on node count");
    if (static_cast<std::size_t>(optimum.size()) != loss->dimension())
      throw std::invalid_argument("solver config: optimum dimension mismatch");
    if (initial && (static_cast<std::size_t>(initial->rows()) != loss->dimension() ||
                    static_cast<std::size_t>(initial->cols()) != loss->node_count()))
      throw std::invalid_argument("solver config: initial state shape mismatch");
    schedules.validate();
  }
};

/// Stored rounds: every round up to 100, then ~100 log-spaced rounds per
/// decade, always ending at the horizon.
inline std::vector<std::uint64_t> trace_rounds(std::uint64_t horizon) {
  std::vector<std::uint64_t> r;
  for (std::uint64_t k = 0; k <= std::min<std::uint64_t>(100, horizon); ++k) r.push_back(k);
  for (int j = 1; r.back() < horizon; ++j) {
    const auto k = static_cast<std::uint64_t>(std::llround(100.0 * std::pow(10.0, j / 100.0)));
    if (k > horizon) break;
    if (k > r.back()) r.push_back(k);
  }
  if (r.back() != horizon) r.push_back(horizon);
  return r;
}

inline TraceMetadata make_metadata(const SolverConfig& cfg, std::uint64_t replicate) {
  TraceMetadata meta;
  meta.config_hash = cfg.config_hash;
  meta.replicate = replicate;
  meta.lambda2_mean = algebraic_connectivity(mean_laplacian(cfg.graph, cfg.failure));
  meta.theta = max_degree(cfg.graph);
  if (!(meta.lambda2_mean > kConnectivityTolerance))
    meta.warnings.push_back("mean Laplacian has lambda2 <= 1e-9: network not connected on average");
  const auto cb = curvature_bounds(*cfg.loss);
  if (!rate_condition_met(cfg.schedules, cfg.graph.node_count(), cb.mu))
    meta.warnings.push_back("alpha0 <= 2N/mu: O(1/k) guarantee not in force, rate may degrade to O(ln k / k)");
  return meta;
}

inline RunTrace run_distributed(const SolverConfig& cfg, std::uint64_t replicate) {
  cfg.validate();
  const LossModel& loss = *cfg.loss;
  const std::size_t n = loss.node_count();
  const std::size_t m = loss.dimension();
  const ReplicateStreams streams{cfg.seed, replicate};

  RunTrace trace;
  trace.meta = make_metadata(cfg, replicate);
  const auto grid = trace_rounds(cfg.horizon);
  trace.rounds.reserve(grid.size());

  StackedState state = cfg.initial ? StackedState(*cfg.initial, 0) : StackedState(n, m, 0);
  Eigen::MatrixXd next(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  Eigen::VectorXd grad(static_cast<Eigen::Index>(m));
  std::vector<Edge> active;
  active.reserve(cfg.graph.edge_count());

  std::size_t g = 0;
  trace.record(state, cfg.optimum);
  ++g;
  for (std::uint64_t k = 0; k < cfg.horizon; ++k) {
    Stream net = streams.network(k);
    sample_active_edges(cfg.graph, cfg.failure, net, active);
    detail::advance(state.nodes, active, beta_at(cfg.schedules, k), alpha_at(cfg.schedules, k), loss, cfg.noise,
                    streams, k, grad, next);
    state.nodes.swap(next);
    state.round = k + 1;
    detail::check_divergence(state.nodes, state.round);
    if (g < grid.size() && grid[g] == state.round) {
      trace.record(state, cfg.optimum);
      ++g;
    }
  }
  return trace;
}

/// y(k+1) = y(k) - (alpha_k / N) sum_i g_i(y(k)), one fresh sample per node
/// per round, drawn from the same per-node streams as the distributed run.
inline RunTrace run_centralized(const SolverConfig& cfg, std::uint64_t replicate) {
  cfg.validate();
  const LossModel& loss = *cfg.loss;
  const std::size_t n = loss.node_count();
  const auto m = static_cast<Eigen::Index>(loss.dimension());
  const ReplicateStreams streams{cfg.seed, replicate};

  RunTrace trace;
  trace.meta = make_metadata(cfg, replicate);
  const auto grid = trace_rounds(cfg.horizon);

  StackedState y(1, loss.dimension(), 0);
  if (cfg.initial) y.nodes.col(0) = cfg.initial->rowwise().mean();
  Eigen::VectorXd grad(m), total(m);

  std::size_t g = 0;
  trace.record(y, cfg.optimum);
  ++g;
  for (std::uint64_t k = 0; k < cfg.horizon; ++k) {
    total.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      Stream s = streams.gradient(i, k);
      stochastic_gradient_into(loss, i, y.nodes.col(0), cfg.noise, s, grad);
      total += grad;
    }
    y.nodes.col(0) -= (alpha_at(cfg.schedules, k) / static_cast<double>(n)) * total;
    y.round = k + 1;
    detail::check_divergence(y.nodes, y.round);
    if (g < grid.size() && grid[g] == y.round) {
      trace.record(y, cfg.optimum);
      ++g;
    }
  }
  return trace;
}

}  // namespace dsgd
