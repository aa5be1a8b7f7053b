#pragma once

// Error metrics, log-log rate estimation, the scalar step-size recursion checker and
// replicate aggregation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsgd/state.hpp"

namespace dsgd {

/// (1/N) sum_i |x_i - x*|^2
inline double mse_across_nodes(const StackedState& state, const Eigen::Ref<const Eigen::VectorXd>& x_star) {
  if (static_cast<std::size_t>(x_star.size()) != state.dimension())
    throw std::invalid_argument("mse: optimum dimension mismatch");
  return (state.nodes.colwise() - x_star).squaredNorm() / static_cast<double>(state.node_count());
}

/// |(I - J) x|^2 = sum_i |x_i - xbar|^2
inline double disagreement(const StackedState& state) {
  const Eigen::VectorXd avg = state.average();
  return (state.nodes.colwise() - avg).squaredNorm();
}

struct TraceMetadata {
  std::uint64_t config_hash = 0;
  std::uint64_t replicate = 0;
  double lambda2_mean = 0.0;
  std::size_t theta = 0;
  std::vector<std::string> warnings;
};

struct RunTrace {
  std::vector<std::uint64_t> rounds;
  std::vector<double> mse;
  std::vector<double> disagreement;
  std::vector<double> iterate_norm_sq;
  TraceMetadata meta;

  void record(const StackedState& s, const Eigen::Ref<const Eigen::VectorXd>& x_star) {
    rounds.push_back(s.round);
    mse.push_back(mse_across_nodes(s, x_star));
    disagreement.push_back(dsgd::disagreement(s));
    iterate_norm_sq.push_back(s.nodes.squaredNorm());
  }
};

enum class Metric { mse, disagreement, iterate_norm_sq };

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::mse: return "mse";
    case Metric::disagreement: return "disagreement";
    case Metric::iterate_norm_sq: return "iterate_norm_sq";
  }
  return "?";
}

struct AggregateTrace {
  std::vector<std::uint64_t> rounds;
  std::vector<double> mse_mean, mse_stderr;
  std::vector<double> disagreement_mean, disagreement_stderr;
  std::vector<double> iterate_norm_sq_mean, iterate_norm_sq_stderr;
  std::size_t replicates = 0;
  std::uint64_t config_hash = 0;

  const std::vector<double>& mean(Metric m) const {
    switch (m) {
      case Metric::mse: return mse_mean;
      case Metric::disagreement: return disagreement_mean;
      case Metric::iterate_norm_sq: return iterate_norm_sq_mean;
    }
    throw std::invalid_argument("unknown metric");
  }
  const std::vector<double>& stderr_of(Metric m) const {
    switch (m) {
      case Metric::mse: return mse_stderr;
      case Metric::disagreement: return disagreement_stderr;
      case Metric::iterate_norm_sq: return iterate_norm_sq_stderr;
    }
    throw std::invalid_argument("unknown metric");
  }

  /// Mean of `m` at stored round k; throws if k is not on the grid.
  double mean_at(Metric m, std::uint64_t k) const {
    const auto it = std::lower_bound(rounds.begin(), rounds.end(), k);
    if (it == rounds.end() || *it != k) throw std::out_of_range("round " + std::to_string(k) + " not stored");
    return mean(m)[static_cast<std::size_t>(it - rounds.begin())];
  }
};

/// Pointwise mean and standard error (unbiased variance / R) across replicates.
inline AggregateTrace aggregate(const std::vector<RunTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("aggregate: no traces");
  const auto& first = traces.front();
  for (const auto& t : traces) {
    if (t.rounds != first.rounds) throw std::invalid_argument("aggregate: mismatched round grids");
    if (t.meta.config_hash != first.meta.config_hash) throw std::invalid_argument("aggregate: mismatched configs");
    if (t.mse.size() != t.rounds.size() || t.disagreement.size() != t.rounds.size() ||
        t.iterate_norm_sq.size() != t.rounds.size())
      throw std::invalid_argument("aggregate: series length mismatch");
  }
  AggregateTrace agg;
  agg.rounds = first.rounds;
  agg.replicates = traces.size();
  agg.config_hash = first.meta.config_hash;
  const std::size_t n = agg.rounds.size();
  const double r = static_cast<double>(traces.size());

  auto reduce = [&](auto member, std::vector<double>& mean, std::vector<double>& se) {
    mean.assign(n, 0.0);
    se.assign(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
      double s = 0.0;
      for (const auto& t : traces) s += (t.*member)[p];
      const double mu = s / r;
      double ss = 0.0;
      for (const auto& t : traces) {
        const double d = (t.*member)[p] - mu;
        ss += d * d;
      }
      mean[p] = mu;
      se[p] = traces.size() > 1 ? std::sqrt(ss / (r - 1.0) / r) : 0.0;
    }
  };
  reduce(&RunTrace::mse, agg.mse_mean, agg.mse_stderr);
  reduce(&RunTrace::disagreement, agg.disagreement_mean, agg.disagreement_stderr);
  reduce(&RunTrace::iterate_norm_sq, agg.iterate_norm_sq_mean, agg.iterate_norm_sq_stderr);
  return agg;
}

/// OLS fit of log10(value) on log10(k); all quantities in log10-log10 units.
struct SlopeEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  std::uint64_t k_lo = 0;
  std::uint64_t k_hi = 0;
  double residual_rms = 0.0;
  std::size_t points = 0;
};

inline SlopeEstimate rate_slope(const std::vector<std::uint64_t>& rounds, const std::vector<double>& values,
                                std::uint64_t k_lo, std::uint64_t k_hi) {
  if (rounds.size() != values.size()) throw std::invalid_argument("rate_slope: series length mismatch");
  if (k_lo < 1 || !(k_lo < k_hi)) throw std::invalid_argument("rate_slope: need 1 <= k_lo < k_hi");
  if (rounds.empty() || k_lo < rounds.front() || k_hi > rounds.back())
    throw std::invalid_argument("rate_slope: window outside trace support");
  std::vector<double> lx, ly;
  for (std::size_t p = 0; p < rounds.size(); ++p) {
    if (rounds[p] < k_lo || rounds[p] > k_hi) continue;
    if (!(values[p] > 0.0))
      throw std::domain_error("rate_slope: non-positive value at k = " + std::to_string(rounds[p]));
    lx.push_back(std::log10(static_cast<double>(rounds[p])));
    ly.push_back(std::log10(values[p]));
  }
  if (lx.size() < 10) throw std::invalid_argument("rate_slope: fewer than 10 points in window");
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t p = 0; p < lx.size(); ++p) {
    mx += lx[p];
    my += ly[p];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t p = 0; p < lx.size(); ++p) {
    sxx += (lx[p] - mx) * (lx[p] - mx);
    sxy += (lx[p] - mx) * (ly[p] - my);
  }
  SlopeEstimate est;
  est.slope = sxy / sxx;
  est.intercept = my - est.slope * mx;
  est.k_lo = k_lo;
  est.k_hi = k_hi;
  est.points = lx.size();
  double rss = 0;
  for (std::size_t p = 0; p < lx.size(); ++p) {
    const double r = ly[p] - (est.intercept + est.slope * lx[p]);
    rss += r * r;
  }
  est.residual_rms = std::sqrt(rss / n);
  return est;
}

inline SlopeEstimate rate_slope(const AggregateTrace& trace, Metric metric, std::uint64_t k_lo,
                                std::uint64_t k_hi) {
  return rate_slope(trace.rounds, trace.mean(metric), k_lo, k_hi);
}

// Scalar recursion: z(k+1) = (1 - r1(k)) z(k) + r2(k) with r1(k) = min(1, a1/(k+1)^d1),
// r2(k) = a2/(k+1)^d2. Case (a) d1 = d2 = 1 claims z = O(1); cases (b)
// d1 = 1/2, d2 = 3/2 and (c) d1 = 1, d2 = 2, a1 > 1 claim z = O(1/k). The
// numeric surrogate is a finite, plateauing sup of the scaled sequence.

enum class Lemma1Case { a, b, c, c_violated, other };

inline const char* to_string(Lemma1Case c) {
  switch (c) {
    case Lemma1Case::a: return "a";
    case Lemma1Case::b: return "b";
    case Lemma1Case::c: return "c";
    case Lemma1Case::c_violated: return "c (a1 <= 1)";
    case Lemma1Case::other: return "other";
  }
  return "?";
}

struct Lemma1Result {
  Lemma1Case label = Lemma1Case::other;
  bool scaled_by_k = false;      // true: sequence reported is (k+1) z(k)
  double sup_scaled = 0.0;       // sup over 0..horizon of the reported sequence
  double last_decade_max = 0.0;  // max over (H/10, H]
  double prev_decade_max = 0.0;  // max over (H/100, H/10]
  double plateau_ratio = 0.0;    // last / previous
  bool plateaued = false;        // plateau_ratio <= kPlateauRatio and sup finite
  std::vector<std::pair<std::uint64_t, double>> table;  // scaled value at k = 10^j and at the horizon

  static constexpr double kPlateauRatio = 1.05;
};

inline Lemma1Case classify_lemma1(double a1, double d1, double d2) {
  auto eq = [](double u, double v) { return std::abs(u - v) < 1e-12; };
  if (eq(d1, 1.0) && eq(d2, 1.0)) return Lemma1Case::a;
  if (eq(d1, 0.5) && eq(d2, 1.5)) return Lemma1Case::b;
  if (eq(d1, 1.0) && eq(d2, 2.0)) return a1 > 1.0 ? Lemma1Case::c : Lemma1Case::c_violated;
  return Lemma1Case::other;
}

inline Lemma1Result lemma1_check(double a1, double a2, double delta1, double delta2, double z0,
                                 std::uint64_t horizon) {
  if (!(a1 > 0 && a2 > 0 && delta1 > 0 && delta2 > 0)) throw std::invalid_argument("lemma1: a1, a2, d1, d2 must be > 0");
  if (!(z0 >= 0)) throw std::invalid_argument("lemma1: z0 must be >= 0");
  if (horizon < 100) throw std::invalid_argument("lemma1: horizon must be >= 100");
  Lemma1Result res;
  res.label = classify_lemma1(a1, delta1, delta2);
  res.scaled_by_k = res.label != Lemma1Case::a;
  const std::uint64_t last_lo = horizon / 10;
  const std::uint64_t prev_lo = horizon / 100;
  std::uint64_t next_mark = 1;
  double z = z0;
  for (std::uint64_t k = 0; k <= horizon; ++k) {
    const double kk = static_cast<double>(k + 1);
    const double scaled = res.scaled_by_k ? kk * z : z;
    if (!std::isfinite(scaled)) {
      res.sup_scaled = std::numeric_limits<double>::infinity();
      return res;
    }
    res.sup_scaled = std::max(res.sup_scaled, scaled);
    if (k > last_lo) res.last_decade_max = std::max(res.last_decade_max, scaled);
    else if (k > prev_lo) res.prev_decade_max = std::max(res.prev_decade_max, scaled);
    if (k == next_mark || k == horizon) {
      res.table.emplace_back(k, scaled);
      if (k == next_mark) next_mark *= 10;
    }
    const double r1 = std::min(1.0, a1 / std::pow(kk, delta1));
    const double r2 = a2 / std::pow(kk, delta2);
    z = (1.0 - r1) * z + r2;
  }
  res.plateau_ratio = res.prev_decade_max > 0 ? res.last_decade_max / res.prev_decade_max
                                              : std::numeric_limits<double>::infinity();
  res.plateaued = std::isfinite(res.sup_scaled) && res.plateau_ratio <= Lemma1Result::kPlateauRatio;
  return res;
}

}  // namespace dsgd
