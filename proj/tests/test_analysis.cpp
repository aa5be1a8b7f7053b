#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dsgd/analysis.hpp"
#include "dsgd/solver.hpp"
#include "test_support.hpp"

using namespace dsgd;
using namespace testing_support;

namespace {

RunTrace synthetic_trace(std::uint64_t horizon, double scale, std::uint64_t replicate) {
  RunTrace t;
  t.meta.replicate = replicate;
  for (auto k : trace_rounds(horizon)) {
    const double kk = static_cast<double>(k) + 1;
    t.rounds.push_back(k);
    t.mse.push_back(scale / kk);
    t.disagreement.push_back(scale / (kk * kk));
    t.iterate_norm_sq.push_back(scale);
  }
  return t;
}

std::vector<double> power_law(const std::vector<std::uint64_t>& k, auto f) {
  std::vector<double> v;
  for (auto x : k) v.push_back(f(static_cast<double>(x)));
  return v;
}

}  // namespace

TEST(Metrics, MseSimpleCases) {
  Eigen::VectorXd xs(1);
  xs << 3.0;
  Eigen::MatrixXd x(1, 2);
  x << 4.0, 2.0;
  EXPECT_DOUBLE_EQ(mse_across_nodes(StackedState(x, 0), xs), 1.0);
  EXPECT_EQ(mse_across_nodes(StackedState(Eigen::MatrixXd::Constant(1, 2, 3.0), 0), xs), 0.0);
  EXPECT_THROW(mse_across_nodes(StackedState(2, 2, 0), xs), std::invalid_argument);
}

TEST(Metrics, MseMatchesNaiveLoop) {
  Stream s(StreamKey{1, 0, Purpose::test, 0, 0});
  const Eigen::MatrixXd x = random_matrix(4, 7, s);
  const Eigen::VectorXd xs = random_vector(4, s);
  double acc = 0;
  for (Eigen::Index i = 0; i < 7; ++i)
    for (Eigen::Index c = 0; c < 4; ++c) acc += (x(c, i) - xs(c)) * (x(c, i) - xs(c));
  EXPECT_NEAR(mse_across_nodes(StackedState(x, 0), xs), acc / 7, 1e-13);
}

TEST(Metrics, DisagreementCasesAndPythagoras) {
  Eigen::MatrixXd x(1, 2);
  x << 1.0, -1.0;
  EXPECT_DOUBLE_EQ(disagreement(StackedState(x, 0)), 2.0);
  EXPECT_EQ(disagreement(StackedState(Eigen::MatrixXd::Constant(3, 4, 1.5), 0)), 0.0);
  Stream s(StreamKey{2, 0, Purpose::test, 0, 0});
  for (int t = 0; t < 20; ++t) {
    const StackedState st(random_matrix(3, 6, s, 2.0), 0);
    const double pyth = st.nodes.squaredNorm() - 6 * st.average().squaredNorm();
    EXPECT_NEAR(disagreement(st), pyth, 1e-12 * std::max(1.0, st.nodes.squaredNorm()));
  }
}

TEST(StackedState, StackedViewIsNodeMajor) {
  Eigen::MatrixXd x(2, 3);
  x << 1, 3, 5, 2, 4, 6;
  const StackedState st(x, 4);
  const auto v = st.stacked();
  for (int i = 0; i < 6; ++i) EXPECT_EQ(v(i), i + 1);
  EXPECT_EQ(st.node(1), Eigen::Vector2d(3, 4));
}

TEST(RateSlope, ExactPowerLawsAndConstants) {
  const auto k = trace_rounds(100000);
  const auto inv = rate_slope(k, power_law(k, [](double x) { return 7.0 / std::max(x, 1.0); }), 100, 100000);
  EXPECT_NEAR(inv.slope, -1.0, 1e-10);
  EXPECT_NEAR(inv.intercept, std::log10(7.0), 1e-10);
  EXPECT_LT(inv.residual_rms, 1e-10);
  EXPECT_EQ(inv.k_lo, 100u);
  EXPECT_EQ(inv.k_hi, 100000u);
  EXPECT_NEAR(rate_slope(k, power_law(k, [](double) { return 4.2; }), 10, 1000).slope, 0.0, 1e-12);
}

TEST(RateSlope, LogOverKFallsInExpectedBand) {
  const auto k = trace_rounds(100000);
  const auto est = rate_slope(k, power_law(k, [](double x) { return 3.0 * std::log(std::max(x, 2.0)) / std::max(x, 1.0); }),
                              1000, 100000);
  EXPECT_GT(est.slope, -1.0);
  EXPECT_LT(est.slope, -0.85);
}

TEST(RateSlope, Errors) {
  const auto k = trace_rounds(1000);
  auto v = power_law(k, [](double x) { return 1.0 / (x + 1); });
  EXPECT_THROW(rate_slope(k, v, 0, 100), std::invalid_argument);
  EXPECT_THROW(rate_slope(k, v, 100, 100), std::invalid_argument);
  EXPECT_THROW(rate_slope(k, v, 100, 2000), std::invalid_argument);
  EXPECT_THROW(rate_slope(k, v, 1, 5), std::invalid_argument);  // fewer than 10 points
  v[200] = 0.0;
  EXPECT_THROW(rate_slope(k, v, 100, 1000), std::domain_error);
  EXPECT_THROW(rate_slope(k, std::vector<double>(3, 1.0), 100, 1000), std::invalid_argument);
}

TEST(Aggregate, MeanAndStandardError) {
  std::vector<RunTrace> traces{synthetic_trace(200, 1.0, 0), synthetic_trace(200, 3.0, 1), synthetic_trace(200, 5.0, 2)};
  const auto agg = aggregate(traces);
  EXPECT_EQ(agg.replicates, 3u);
  EXPECT_DOUBLE_EQ(agg.iterate_norm_sq_mean[10], 3.0);
  // sample variance of {1,3,5} is 4, so the standard error is sqrt(4/3).
  EXPECT_NEAR(agg.iterate_norm_sq_stderr[10], std::sqrt(4.0 / 3.0), 1e-14);
  EXPECT_NEAR(agg.mean_at(Metric::mse, 9), 3.0 / 10, 1e-15);
  EXPECT_THROW(agg.mean_at(Metric::mse, 199 + 50), std::out_of_range);
  for (double se : agg.mse_stderr) EXPECT_GE(se, 0.0);
}

TEST(Aggregate, SingleReplicateAndErrors) {
  const auto one = aggregate({synthetic_trace(50, 2.0, 0)});
  EXPECT_EQ(one.replicates, 1u);
  EXPECT_TRUE(std::all_of(one.mse_stderr.begin(), one.mse_stderr.end(), [](double s) { return s == 0.0; }));
  EXPECT_THROW(aggregate({}), std::invalid_argument);
  EXPECT_THROW(aggregate({synthetic_trace(50, 1, 0), synthetic_trace(60, 1, 1)}), std::invalid_argument);
  auto other = synthetic_trace(50, 1, 1);
  other.meta.config_hash = 9;
  EXPECT_THROW(aggregate({synthetic_trace(50, 1, 0), other}), std::invalid_argument);
}

TEST(Aggregate, InvariantUnderReplicateOrder) {
  std::vector<RunTrace> traces;
  for (int r = 0; r < 6; ++r) traces.push_back(synthetic_trace(300, 1.0 + r * r, static_cast<std::uint64_t>(r)));
  const auto a = aggregate(traces);
  std::reverse(traces.begin(), traces.end());
  std::rotate(traces.begin(), traces.begin() + 2, traces.end());
  const auto b = aggregate(traces);
  for (std::size_t p = 0; p < a.rounds.size(); ++p) {
    EXPECT_NEAR(a.mse_mean[p], b.mse_mean[p], 1e-15 * a.mse_mean[p]);
    EXPECT_NEAR(a.mse_stderr[p], b.mse_stderr[p], 1e-12 * a.mse_stderr[p]);
  }
}

TEST(Lemma1, CaseLabels) {
  EXPECT_EQ(classify_lemma1(2.0, 1.0, 1.0), Lemma1Case::a);
  EXPECT_EQ(classify_lemma1(2.0, 0.5, 1.5), Lemma1Case::b);
  EXPECT_EQ(classify_lemma1(2.0, 1.0, 2.0), Lemma1Case::c);
  EXPECT_EQ(classify_lemma1(0.5, 1.0, 2.0), Lemma1Case::c_violated);
  EXPECT_EQ(classify_lemma1(1.0, 0.7, 1.0), Lemma1Case::other);
}

TEST(Lemma1, CaseAConvergesToRatio) {
  const auto r = lemma1_check(2.0, 1.0, 1.0, 1.0, 5.0, 100000);
  EXPECT_FALSE(r.scaled_by_k);
  EXPECT_TRUE(r.plateaued);
  // z -> a2/a1 when both rates decay like 1/k.
  EXPECT_NEAR(r.table.back().second, 0.5, 1e-3);
}

TEST(Lemma1, CasesBAndCPlateau) {
  for (auto [a1, d1, d2] : {std::tuple{1.0, 0.5, 1.5}, std::tuple{2.0, 1.0, 2.0}}) {
    const auto r = lemma1_check(a1, 1.0, d1, d2, 1.0, 1000000);
    EXPECT_TRUE(r.scaled_by_k);
    EXPECT_TRUE(std::isfinite(r.sup_scaled));
    EXPECT_TRUE(r.plateaued) << r.plateau_ratio;
  }
}

TEST(Lemma1, ViolatedCaseCGrows) {
  const auto r = lemma1_check(0.5, 1.0, 1.0, 2.0, 1.0, 1000000);
  EXPECT_EQ(r.label, Lemma1Case::c_violated);
  EXPECT_FALSE(r.plateaued);
  // (k+1) z(k) grows like k^(1 - a1) = sqrt(k): one decade multiplies by ~sqrt(10).
  EXPECT_NEAR(r.plateau_ratio, std::sqrt(10.0), 0.2);
}

TEST(Lemma1, TableAndErrors) {
  const auto r = lemma1_check(2.0, 1.0, 1.0, 2.0, 0.0, 12345);
  std::vector<std::uint64_t> ks;
  for (const auto& [k, v] : r.table) ks.push_back(k);
  EXPECT_EQ(ks, (std::vector<std::uint64_t>{1, 10, 100, 1000, 10000, 12345}));
  EXPECT_THROW(lemma1_check(0.0, 1, 1, 1, 1, 1000), std::invalid_argument);
  EXPECT_THROW(lemma1_check(1, 1, 1, 1, -1, 1000), std::invalid_argument);
  EXPECT_THROW(lemma1_check(1, 1, 1, 1, 1, 50), std::invalid_argument);
}
