#include <gtest/gtest.h>

#include "selbayes/errors.hpp"
#include "selbayes/experiments.hpp"
#include "selbayes/oracle.hpp"
#include "selbayes/parallel.hpp"

using namespace selbayes;

namespace {

FcrConfig small_fcr(std::uint64_t seed) {
  FcrConfig c;
  c.n = 30;
  c.p = 8;
  c.lambda = 1.0;
  c.rounds = 6;
  c.seed = seed;
  c.n_draws = 1500;
  return c;
}

}  // namespace

TEST(Design, StandardizedColumns) {
  const MatrixXd X = standardized_design(20, 5, 3);
  for (Index j = 0; j < X.cols(); ++j) {
    EXPECT_NEAR(X.col(j).sum(), 0.0, 1e-12);
    EXPECT_NEAR(X.col(j).norm(), 1.0, 1e-12);
  }
  EXPECT_EQ(X, standardized_design(20, 5, 3));
  EXPECT_NE(X, standardized_design(20, 5, 4));
}

TEST(Curves, ReferenceRows) {
  const auto curves = univariate_curves({-1.0, 0.0, 1.0}, {-0.5, 0.0, 1.0, 2.0}, 1.0);
  ASSERT_EQ(curves.mu_rows.size(), 3u);
  ASSERT_EQ(curves.y_rows.size(), 4u);
  const CurveRowMu& zero = curves.mu_rows[1];
  EXPECT_NEAR(zero.exact_log_probability, std::log(0.5), 1e-15);
  EXPECT_EQ(zero.neg_h_chernoff, 0.0);
  EXPECT_LT(zero.neg_h_barrier, 0.0);
  for (const auto& row : curves.y_rows) EXPECT_EQ(row.unadjusted, row.y);
  EXPECT_NEAR(curves.y_rows[3].approximate_mle, 11.0 / 6.0, 1e-12);
  EXPECT_NEAR(curves.y_rows[3].exact_mle, exact_univariate_mle(2.0), 1e-12);
  EXPECT_TRUE(std::isnan(curves.y_rows[0].approximate_mle));
  EXPECT_TRUE(std::isnan(curves.y_rows[1].exact_mle));
  EXPECT_TRUE(std::isfinite(curves.y_rows[0].randomized_mle));
}

TEST(Curves, BarrierIsCloserOnTheStandardGrid) {
  std::vector<double> mu;
  for (int k = 0; k <= 80; ++k) mu.push_back(-4.0 + 0.1 * k);
  const auto curves = univariate_curves(mu, {1.0});
  double err_b = 0.0;
  double err_c = 0.0;
  for (const auto& r : curves.mu_rows) {
    err_b += std::abs(r.neg_h_barrier - r.exact_log_probability);
    err_c += std::abs(r.neg_h_chernoff - r.exact_log_probability);
  }
  EXPECT_LT(err_b, err_c);
}

TEST(Fcr, ReportShapeAndDeterminism) {
  const FcrReport a = run_fcr_experiment(small_fcr(9));
  const FcrReport b = run_fcr_experiment(small_fcr(9));
  ASSERT_EQ(a.records.size(), 6u);
  for (std::size_t m = 0; m < kFcrMethods.size(); ++m) {
    EXPECT_EQ(std::isnan(a.fcr[m]), std::isnan(b.fcr[m]));
    if (!std::isnan(a.fcr[m])) EXPECT_EQ(a.fcr[m], b.fcr[m]);
    EXPECT_EQ(a.rounds_used[m], b.rounds_used[m]);
  }
  for (std::size_t r = 0; r < a.records.size(); ++r) {
    for (std::size_t m = 0; m < kFcrMethods.size(); ++m) {
      const MethodRound& x = a.records[r].methods[m];
      EXPECT_EQ(x.E, b.records[r].methods[m].E);
      EXPECT_EQ(x.lengths, b.records[r].methods[m].lengths);
      if (!x.skipped) {
        EXPECT_EQ(x.covered.size(), x.E.size());
        EXPECT_EQ(x.lengths.size(), x.E.size());
      }
    }
  }
  // The unselected method reports on every coordinate in every round.
  const auto& all = a.records[0].methods[static_cast<std::size_t>(FcrMethod::no_selection)];
  EXPECT_EQ(all.E.size(), 8u);
}

TEST(Fcr, ThreadCountDoesNotChangeResults) {
  FcrConfig one = small_fcr(10);
  FcrConfig two = small_fcr(10);
  two.threads = 2;
  const FcrReport a = run_fcr_experiment(one);
  const FcrReport b = run_fcr_experiment(two);
  for (std::size_t r = 0; r < a.records.size(); ++r)
    for (std::size_t m = 0; m < kFcrMethods.size(); ++m)
      EXPECT_EQ(a.records[r].methods[m].lengths, b.records[r].methods[m].lengths);
}

TEST(Fcr, NoSelectionNormalIntervalsHaveNominalError) {
  FcrConfig c = small_fcr(11);
  c.rounds = 40;
  c.p = 10;
  c.n_draws = 200;
  c.level = 0.9;
  const FcrReport r = run_fcr_experiment(c);
  // Binomial standard error over rounds * p intervals.
  const double se = std::sqrt(0.1 * 0.9 / (40.0 * 10.0));
  EXPECT_NEAR(r.fcr_of(FcrMethod::no_selection), 0.1, 3.0 * se);

  c.level = 0.999;
  const FcrReport wide = run_fcr_experiment(c);
  EXPECT_LE(wide.fcr_of(FcrMethod::no_selection), 0.01);
}

TEST(Fcr, HugeLambdaSkipsEveryRound) {
  FcrConfig c = small_fcr(12);
  c.lambda = 1e6;
  c.rounds = 2;
  try {
    run_fcr_experiment(c);
    FAIL() << "expected all_rounds_skipped";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::all_rounds_skipped);
    EXPECT_EQ(e.category(), ErrorCategory::selection);
  }
}

TEST(Consistency, PropertiesAndDeterminism) {
  ConsistencyConfig c;
  c.replications = 200;
  c.seed = 4;
  const ConsistencyReport a = consistency_experiment(c);
  ASSERT_EQ(a.rows.size(), 3u);
  EXPECT_GT(a.rows[0].randomized_mle, a.rows[1].randomized_mle);
  EXPECT_GT(a.rows[1].randomized_mle, a.rows[2].randomized_mle);
  EXPECT_GE(a.rows[2].nonrandomized_mle, 0.1);
  EXPECT_GT(a.rows[2].unadjusted_mean, 0.1);
  c.threads = 2;
  const ConsistencyReport b = consistency_experiment(c);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].randomized_mle, b.rows[i].randomized_mle);
    EXPECT_EQ(a.rows[i].nonrandomized_mle, b.rows[i].nonrandomized_mle);
    EXPECT_EQ(a.rows[i].unadjusted_mean, b.rows[i].unadjusted_mean);
  }
}

TEST(Parallel, CoversEveryIndexOnce) {
  std::vector<int> hits(100, 0);
  parallel_for(100, 3, [&](long i) { hits[static_cast<std::size_t>(i)] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}
