#pragma once

// Local costs f_i (quadratic and L2-regularised logistic empirical risks),
// their exact and stochastic gradient oracles, curvature bounds, synthetic
// data generation and the reference optimum of f = sum_i f_i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
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

enum class LossKind { quadratic, logistic };

inline const char* to_string(LossKind k) { return k == LossKind::quadratic ? "quadratic" : "logistic"; }

/// Samples held by one node: row j of `features` is a_{i,j}, `labels(j)` is b_{i,j}.
struct NodeData {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;
};

class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(std::vector<NodeData> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw std::invalid_argument("dataset: at least one node required");
    feature_dim_ = static_cast<std::size_t>(nodes_.front().features.cols());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& nd = nodes_[i];
      if (nd.features.rows() < 1)
        throw std::invalid_argument("dataset: node " + std::to_string(i) + " has no samples");
      if (static_cast<std::size_t>(nd.features.cols()) != feature_dim_)
        throw std::invalid_argument("dataset: feature dimension differs at node " + std::to_string(i));
      if (nd.labels.size() != nd.features.rows())
        throw std::invalid_argument("dataset: label count mismatch at node " + std::to_string(i));
    }
    if (feature_dim_ == 0) throw std::invalid_argument("dataset: feature dimension must be positive");
  }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::size_t sample_count(std::size_t node) const { return static_cast<std::size_t>(nodes_.at(node).labels.size()); }
  const NodeData& node(std::size_t i) const { return nodes_.at(i); }
  const std::vector<NodeData>& nodes() const noexcept { return nodes_; }

 private:
  std::vector<NodeData> nodes_;
  std::size_t feature_dim_ = 0;
};

struct DataGenOptions {
  std::size_t n_nodes = 10;
  std::size_t n_per_node = 10;
  std::size_t feature_dim = 3;
  double label_noise_sd = 2.0;
  /// Node i (1-based) adds Uniform[0, feature_spread * i] to every feature entry.
  double feature_spread = 5.0;
  /// logistic: b = sign(x1'a + x0 + eps); quadratic: b = x1'a + x0 + eps.
  LossKind labels = LossKind::logistic;
  std::uint64_t seed = 1;
};

struct GeneratedData {
  Dataset dataset;
  Eigen::VectorXd true_vector;  // (x1, x0): feature weights then intercept
};

inline GeneratedData generate_dataset(const DataGenOptions& opt) {
  if (opt.n_nodes == 0 || opt.n_per_node == 0 || opt.feature_dim == 0)
    throw std::invalid_argument("generate_dataset: counts must be positive");
  if (!(opt.label_noise_sd >= 0.0)) throw std::invalid_argument("generate_dataset: noise sd must be >= 0");
  const auto d = static_cast<Eigen::Index>(opt.feature_dim);
  const auto n = static_cast<Eigen::Index>(opt.n_per_node);

  Stream truth(StreamKey{opt.seed, 0, Purpose::data, 0, 0});
  Eigen::VectorXd x_true(d + 1);
  for (Eigen::Index c = 0; c <= d; ++c) x_true(c) = truth.normal();

  std::vector<NodeData> nodes(opt.n_nodes);
  for (std::size_t i = 0; i < opt.n_nodes; ++i) {
    Stream s(StreamKey{opt.seed, 0, Purpose::data, i + 1, 0});
    const double spread = opt.feature_spread * static_cast<double>(i + 1);
    NodeData& nd = nodes[i];
    nd.features.resize(n, d);
    nd.labels.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index c = 0; c < d; ++c) nd.features(j, c) = s.normal() + s.uniform(0.0, spread);
      const double eps = opt.label_noise_sd > 0.0 ? opt.label_noise_sd * s.normal() : 0.0;
      const double score = nd.features.row(j).dot(x_true.head(d)) + x_true(d) + eps;
      nd.labels(j) = opt.labels == LossKind::logistic ? (score >= 0.0 ? 1.0 : -1.0) : score;
    }
  }
  return {Dataset(std::move(nodes)), std::move(x_true)};
}

namespace detail {

// ln(1 + e^t) without overflow.
inline double softplus(double t) noexcept { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double sigmoid(double t) noexcept {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace detail

/// f_i(x) = (1/n_i) sum_j loss(x; a_ij, b_ij) + (kappa/2)|x|^2.
///
/// For the logistic kind the variable is x = (x1, x0) and every feature
/// vector is augmented with a trailing 1, so the regulariser covers the
/// intercept as well.
class LossModel {
 public:
  LossModel(LossKind kind, Dataset data, double kappa) : kind_(kind), data_(std::move(data)), kappa_(kappa) {
    if (!(kappa >= 0.0)) throw std::invalid_argument("loss model: kappa must be >= 0");
    design_.reserve(data_.node_count());
    for (std::size_t i = 0; i < data_.node_count(); ++i) {
      const auto& nd = data_.node(i);
      if (kind_ == LossKind::logistic) {
        for (Eigen::Index j = 0; j < nd.labels.size(); ++j)
          if (nd.labels(j) != 1.0 && nd.labels(j) != -1.0)
            throw std::invalid_argument("loss model: logistic labels must be +-1");
        Eigen::MatrixXd aug(nd.features.rows(), nd.features.cols() + 1);
        aug.leftCols(nd.features.cols()) = nd.features;
        aug.col(nd.features.cols()).setOnes();
        design_.push_back(std::move(aug));
      } else {
        design_.push_back(nd.features);
      }
    }
  }

  LossKind kind() const noexcept { return kind_; }
  double kappa() const noexcept { return kappa_; }
  const Dataset& dataset() const noexcept { return data_; }
  std::size_t node_count() const noexcept { return data_.node_count(); }
  std::size_t dimension() const noexcept {
    return data_.feature_dim() + (kind_ == LossKind::logistic ? 1 : 0);
  }
  std::size_t sample_count(std::size_t node) const { return data_.sample_count(node); }
  /// Rows are the (augmented) sample vectors of `node`.
  const Eigen::MatrixXd& design(std::size_t node) const { return design_.at(node); }
  const Eigen::VectorXd& labels(std::size_t node) const { return data_.node(node).labels; }

  double sample_loss(std::size_t node, std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const auto row = design_[node].row(static_cast<Eigen::Index>(j));
    const double b = labels(node)(static_cast<Eigen::Index>(j));
    const double ax = row.dot(x);
    if (kind_ == LossKind::quadratic) return 0.5 * (ax - b) * (ax - b);
    return detail::softplus(-b * ax);
  }

  /// out += scale * grad loss(x; d_{node,j}), without the regulariser.
  void add_sample_gradient(std::size_t node, std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& x,
                           double scale, Eigen::Ref<Eigen::VectorXd> out) const {
    const auto row = design_[node].row(static_cast<Eigen::Index>(j));
    const double b = labels(node)(static_cast<Eigen::Index>(j));
    const double ax = row.dot(x);
    const double coef = kind_ == LossKind::quadratic ? (ax - b) : -b * detail::sigmoid(-b * ax);
    out.noalias() += (scale * coef) * row.transpose();
  }

  void check_point(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (static_cast<std::size_t>(x.size()) != dimension())
      throw std::invalid_argument("loss model: point dimension " + std::to_string(x.size()) + " != " +
                                  std::to_string(dimension()));
  }

 private:
  LossKind kind_;
  Dataset data_;
  double kappa_;
  std::vector<Eigen::MatrixXd> design_;
};

inline double evaluate(const LossModel& loss, std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& x) {
  loss.check_point(x);
  const std::size_t n = loss.sample_count(node);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += loss.sample_loss(node, j, x);
  return acc / static_cast<double>(n) + 0.5 * loss.kappa() * x.squaredNorm();
}

inline void true_gradient_into(const LossModel& loss, std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& x,
                               Eigen::Ref<Eigen::VectorXd> out) {
  const std::size_t n = loss.sample_count(node);
  out = loss.kappa() * x;
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) loss.add_sample_gradient(node, j, x, w, out);
}

inline Eigen::VectorXd true_gradient(const LossModel& loss, std::size_t node,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  loss.check_point(x);
  Eigen::VectorXd g(x.size());
  true_gradient_into(loss, node, x, g);
  return g;
}

/// grad f(x) = sum_i grad f_i(x).
inline Eigen::VectorXd full_gradient(const LossModel& loss, const Eigen::Ref<const Eigen::VectorXd>& x) {
  loss.check_point(x);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd g(x.size());
  for (std::size_t i = 0; i < loss.node_count(); ++i) {
    true_gradient_into(loss, i, x, g);
    total += g;
  }
  return total;
}

enum class NoiseMode { none, datapoint, gaussian };

inline const char* to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::none: return "none";
    case NoiseMode::datapoint: return "datapoint";
    case NoiseMode::gaussian: return "gaussian";
  }
  return "?";
}

/// How a node's gradient estimate deviates from grad f_i.
///  - none: exact gradient.
///  - datapoint: gradient of `batch` samples drawn uniformly with replacement
///    (plus the regulariser gradient).
///  - gaussian: exact gradient plus isotropic N(0, variance I).
struct NoiseOracle {
  NoiseMode mode = NoiseMode::datapoint;
  double variance = 0.0;
  std::size_t batch = 1;
};

inline void stochastic_gradient_into(const LossModel& loss, std::size_t node,
                                     const Eigen::Ref<const Eigen::VectorXd>& x, const NoiseOracle& noise,
                                     Stream& stream, Eigen::Ref<Eigen::VectorXd> out) {
  switch (noise.mode) {
    case NoiseMode::none:
      true_gradient_into(loss, node, x, out);
      return;
    case NoiseMode::gaussian: {
      true_gradient_into(loss, node, x, out);
      if (noise.variance > 0.0) {
        const double sd = std::sqrt(noise.variance);
        for (Eigen::Index c = 0; c < out.size(); ++c) out(c) += sd * stream.normal();
      }
      return;
    }
    case NoiseMode::datapoint: {
      const std::size_t batch = std::max<std::size_t>(1, noise.batch);
      const std::uint64_t n = loss.sample_count(node);
      out = loss.kappa() * x;
      const double w = 1.0 / static_cast<double>(batch);
      for (std::size_t b = 0; b < batch; ++b)
        loss.add_sample_gradient(node, static_cast<std::size_t>(stream.uniform_index(n)), x, w, out);
      return;
    }
  }
}

inline Eigen::VectorXd stochastic_gradient(const LossModel& loss, std::size_t node,
                                           const Eigen::Ref<const Eigen::VectorXd>& x, const NoiseOracle& noise,
                                           Stream& stream) {
  loss.check_point(x);
  Eigen::VectorXd g(x.size());
  stochastic_gradient_into(loss, node, x, noise, stream, g);
  return g;
}

struct CurvatureBounds {
  double mu = 0.0;
  double lip = 0.0;
  bool strongly_convex() const noexcept { return mu > 0.0; }
};

/// Global Hessian bounds mu I <= hess f_i(x) <= L I valid for all nodes and x.
/// Quadratic: spectrum of the per-node second-moment matrix plus kappa.
/// Logistic: kappa below (sigmoid curvature can vanish), and the sigmoid
/// curvature bound 1/4 above.
inline CurvatureBounds curvature_bounds(const LossModel& loss) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < loss.node_count(); ++i) {
    const auto& a = loss.design(i);
    const double n = static_cast<double>(loss.sample_count(i));
    const double w = loss.kind() == LossKind::logistic ? 0.25 / n : 1.0 / n;
    const Eigen::MatrixXd s = w * (a.transpose() * a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    lo = std::min(lo, std::max(0.0, es.eigenvalues()(0)));
    hi = std::max(hi, es.eigenvalues()(es.eigenvalues().size() - 1));
  }
  CurvatureBounds cb;
  cb.mu = loss.kappa() + (loss.kind() == LossKind::quadratic ? lo : 0.0);
  cb.lip = loss.kappa() + hi;
  return cb;
}

struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ReferenceMethod { automatic, gradient_descent, direct };

struct ReferenceOptions {
  ReferenceMethod method = ReferenceMethod::automatic;
  double tolerance = 1e-10;
  std::uint64_t max_iterations = 10'000'000;
  std::optional<Eigen::VectorXd> start;
};

struct ReferenceSolution {
  Eigen::VectorXd x_star;
  double grad_norm_at_solution = 0.0;
  std::uint64_t iterations = 0;
};

/// Minimiser of f = sum_i f_i. Gradient descent uses the fixed step 1/(N L)
/// and stops once |grad f(x)| <= tol * max(1, |x|); the quadratic case can
/// instead solve the normal equations directly.
inline ReferenceSolution solve_reference_optimum(const LossModel& loss, const ReferenceOptions& opt = {}) {
  const auto cb = curvature_bounds(loss);
  if (!cb.strongly_convex())
    throw std::invalid_argument("reference optimum: strong convexity lost (mu <= 0)");
  const auto m = static_cast<Eigen::Index>(loss.dimension());
  const double big_n = static_cast<double>(loss.node_count());
  const bool direct = opt.method == ReferenceMethod::direct ||
                      (opt.method == ReferenceMethod::automatic && loss.kind() == LossKind::quadratic);
  ReferenceSolution sol;
  if (direct) {
    if (loss.kind() != LossKind::quadratic)
      throw std::invalid_argument("reference optimum: direct solve needs a quadratic loss");
    Eigen::MatrixXd h = big_n * loss.kappa() * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < loss.node_count(); ++i) {
      const double w = 1.0 / static_cast<double>(loss.sample_count(i));
      h += w * loss.design(i).transpose() * loss.design(i);
      rhs += w * loss.design(i).transpose() * loss.labels(i);
    }
    sol.x_star = h.ldlt().solve(rhs);
    sol.grad_norm_at_solution = full_gradient(loss, sol.x_star).norm();
    return sol;
  }
  Eigen::VectorXd x = opt.start ? *opt.start : Eigen::VectorXd::Zero(m);
  loss.check_point(x);
  const double step = 1.0 / (big_n * cb.lip);
  for (std::uint64_t it = 0; it <= opt.max_iterations; ++it) {
    const Eigen::VectorXd g = full_gradient(loss, x);
    const double gn = g.norm();
    if (!std::isfinite(gn)) throw NonConvergenceError("reference optimum: gradient became non-finite");
    if (gn <= opt.tolerance * std::max(1.0, x.norm())) {
      sol.x_star = std::move(x);
      sol.grad_norm_at_solution = gn;
      sol.iterations = it;
      return sol;
    }
    x -= step * g;
  }
  throw NonConvergenceError("reference optimum: iteration cap " + std::to_string(opt.max_iterations) +
                            " exceeded");
}

/// Empirical moments of v = g(x) - grad f_i(x) at one probe point.
struct ProbeMoment {
  std::size_t node = 0;
  double x_norm_sq = 0.0;
  double second_moment = 0.0;
  Eigen::VectorXd mean;         // componentwise empirical mean of v
  Eigen::VectorXd mean_stderr;  // componentwise standard error of that mean
};

struct NoiseFit {
  double c_v = 0.0;
  double c_v_prime = 0.0;
  double max_mean_norm = 0.0;
  std::vector<ProbeMoment> probes;

  double bound(double x_norm_sq) const noexcept { return c_v * x_norm_sq + c_v_prime; }
};

inline ProbeMoment probe_noise_moment(const LossModel& loss, std::size_t node, const Eigen::VectorXd& x,
                                      std::uint64_t draws, const NoiseOracle& noise, Stream& stream) {
  if (draws < 2) throw std::invalid_argument("noise probe: need at least 2 draws");
  const auto m = x.size();
  const Eigen::VectorXd exact = true_gradient(loss, node, x);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd g(m);
  double norm_sq_sum = 0.0;
  for (std::uint64_t t = 0; t < draws; ++t) {
    stochastic_gradient_into(loss, node, x, noise, stream, g);
    g -= exact;
    sum += g;
    sum_sq += g.cwiseProduct(g);
    norm_sq_sum += g.squaredNorm();
  }
  const double r = static_cast<double>(draws);
  ProbeMoment pm;
  pm.node = node;
  pm.x_norm_sq = x.squaredNorm();
  pm.second_moment = norm_sq_sum / r;
  pm.mean = sum / r;
  const Eigen::VectorXd var = ((sum_sq - r * pm.mean.cwiseProduct(pm.mean)) / (r - 1.0)).cwiseMax(0.0);
  pm.mean_stderr = (var / r).cwiseSqrt();
  return pm;
}

/// Fits E|v|^2 <= c_v |x|^2 + c_v' over the probes of the given nodes.
///
/// Ordinary least squares of the empirical second moment on |x|^2, each
/// coefficient clamped at zero, then the intercept raised by the largest
/// positive residual so the bound dominates every probe.
inline NoiseFit noise_moment_fit(const LossModel& loss, const std::vector<std::size_t>& nodes,
                                 const std::vector<Eigen::VectorXd>& probe_points, std::uint64_t draws,
                                 const NoiseOracle& noise, std::uint64_t seed) {
  if (probe_points.size() < 2) throw std::invalid_argument("noise fit: need at least 2 probe points");
  {
    std::vector<double> norms;
    for (const auto& p : probe_points) norms.push_back(p.squaredNorm());
    std::sort(norms.begin(), norms.end());
    if (norms.front() == norms.back())
      throw std::invalid_argument("noise fit: probe points need distinct norms");
  }
  NoiseFit fit;
  for (std::size_t node : nodes) {
    for (std::size_t p = 0; p < probe_points.size(); ++p) {
      loss.check_point(probe_points[p]);
      Stream stream(StreamKey{seed, 0, Purpose::probe, node, p});
      fit.probes.push_back(probe_noise_moment(loss, node, probe_points[p], draws, noise, stream));
      fit.max_mean_norm = std::max(fit.max_mean_norm, fit.probes.back().mean.norm());
    }
  }
  const double k = static_cast<double>(fit.probes.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& pm : fit.probes) {
    sx += pm.x_norm_sq;
    sy += pm.second_moment;
    sxx += pm.x_norm_sq * pm.x_norm_sq;
    sxy += pm.x_norm_sq * pm.second_moment;
  }
  const double denom = k * sxx - sx * sx;
  double slope = denom > 0 ? (k * sxy - sx * sy) / denom : 0.0;
  double intercept = (sy - slope * sx) / k;
  if (slope < 0.0) {
    slope = 0.0;
    intercept = sy / k;
  }
  if (intercept < 0.0) {
    intercept = 0.0;
    slope = sxx > 0 ? std::max(0.0, sxy / sxx) : 0.0;
  }
  double worst = 0.0;
  for (const auto& pm : fit.probes) worst = std::max(worst, pm.second_moment - (slope * pm.x_norm_sq + intercept));
  fit.c_v = slope;
  fit.c_v_prime = intercept + worst;
  // Rounding in the sum above can leave a probe a few ulps above the bound.
  for (const auto& pm : fit.probes)
    while (pm.second_moment > fit.bound(pm.x_norm_sq))
      fit.c_v_prime = std::nextafter(fit.c_v_prime, std::numeric_limits<double>::infinity());
  return fit;
}

inline NoiseFit noise_moment_fit(const LossModel& loss, std::size_t node,
                                 const std::vector<Eigen::VectorXd>& probe_points, std::uint64_t draws,
                                 const NoiseOracle& noise, std::uint64_t seed) {
  return noise_moment_fit(loss, std::vector<std::size_t>{node}, probe_points, draws, noise, seed);
}

// Dataset CSV: header `node_id,sample_id,b,a_1,...,a_d`, one row per sample.
inline void write_dataset_csv(std::ostream& os, const Dataset& data) {
  os << "node_id,sample_id,b";
  for (std::size_t c = 1; c <= data.feature_dim(); ++c) os << ",a_" << c;
  os << '\n';
  char buf[64];
  for (std::size_t i = 0; i < data.node_count(); ++i) {
    const auto& nd = data.node(i);
    for (Eigen::Index j = 0; j < nd.labels.size(); ++j) {
      os << i << ',' << j;
      std::snprintf(buf, sizeof buf, ",%.17g", nd.labels(j));
      os << buf;
      for (Eigen::Index c = 0; c < nd.features.cols(); ++c) {
        std::snprintf(buf, sizeof buf, ",%.17g", nd.features(j, c));
        os << buf;
      }
      os << '\n';
    }
  }
}

inline Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("dataset csv: empty input");
  if (line.rfind("node_id,sample_id,b", 0) != 0) throw std::runtime_error("dataset csv: unexpected header");
  const auto d = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 2;
  if (d == 0) throw std::runtime_error("dataset csv: no feature columns");
  std::map<std::size_t, std::map<std::size_t, std::vector<double>>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw std::runtime_error("dataset csv: bad number on line " + std::to_string(line_no));
      }
    }
    if (vals.size() != d + 3) throw std::runtime_error("dataset csv: wrong column count on line " + std::to_string(line_no));
    if (vals[0] < 0 || vals[1] < 0) throw std::runtime_error("dataset csv: negative id on line " + std::to_string(line_no));
    rows[static_cast<std::size_t>(vals[0])][static_cast<std::size_t>(vals[1])] =
        std::vector<double>(vals.begin() + 2, vals.end());
  }
  std::vector<NodeData> nodes;
  std::size_t expect = 0;
  for (const auto& [node_id, samples] : rows) {
    if (node_id != expect++) throw std::runtime_error("dataset csv: node ids must be contiguous from 0");
    NodeData nd;
    nd.features.resize(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(d));
    nd.labels.resize(static_cast<Eigen::Index>(samples.size()));
    Eigen::Index j = 0;
    for (const auto& [sid, v] : samples) {
      nd.labels(j) = v[0];
      for (std::size_t c = 0; c < d; ++c) nd.features(j, static_cast<Eigen::Index>(c)) = v[c + 1];
      ++j;
    }
    nodes.push_back(std::move(nd));
  }
  return Dataset(std::move(nodes));
}

// Reference CSV: a single line `grad_norm,x_1,...,x_m`.
inline void write_reference_csv(std::ostream& os, const ReferenceSolution& ref) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", ref.grad_norm_at_solution);
  os << buf;
  for (Eigen::Index c = 0; c < ref.x_star.size(); ++c) {
    std::snprintf(buf, sizeof buf, ",%.17g", ref.x_star(c));
    os << buf;
  }
  os << '\n';
}

inline ReferenceSolution read_reference_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("reference csv: empty input");
  std::vector<double> vals;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
  if (vals.size() < 2) throw std::runtime_error("reference csv: expected grad norm and at least one entry");
  ReferenceSolution ref;
  ref.grad_norm_at_solution = vals[0];
  ref.x_star = Eigen::Map<Eigen::VectorXd>(vals.data() + 1, static_cast<Eigen::Index>(vals.size() - 1));
  return ref;
}

}  // namespace dsgd
