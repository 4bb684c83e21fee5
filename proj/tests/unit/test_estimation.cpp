#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "selbayes/errors.hpp"
#include "selbayes/estimation.hpp"
#include "selbayes/oracle.hpp"
#include "specs.hpp"

using namespace selbayes;
using namespace spec_support;

namespace {

PosteriorSpec vacuous_spec(const MatrixXd& X, const VectorXd& y, Prior prior) {
  return PosteriorSpec{GenerativeModel::selected(1.0, X), std::move(prior),
                       bare_context(Polytope::whole_space(X.rows()), y, X.cols()), y};
}

MatrixXd small_design() {
  MatrixXd X(5, 2);
  X << 1, 0.2, 0.4, 1, -1, 0.5, 0.3, -0.7, 2, 1;
  return X;
}

VectorXd small_response() { return (VectorXd(5) << 1.0, -0.5, 0.3, 2.0, 0.1).finished(); }

// min_z (mu - z)^2 / (2 s2) + log(1 + sqrt(s2) / z) over z > 0, by ternary search
// on the convex objective.
double univariate_h(double mu, double s2) {
  auto f = [&](double z) { return (mu - z) * (mu - z) / (2.0 * s2) + std::log1p(std::sqrt(s2) / z); };
  double lo = 1e-9;
  double hi = std::max(mu, 0.0) + 50.0;
  for (int it = 0; it < 300; ++it) {
    const double a = lo + (hi - lo) / 3.0;
    const double b = hi - (hi - lo) / 3.0;
    (f(a) < f(b) ? hi : lo) = f(a) < f(b) ? b : a;
  }
  return f(0.5 * (lo + hi));
}

}  // namespace

TEST(MapEstimate, VacuousFlatIsLeastSquares) {
  const MatrixXd X = small_design();
  const VectorXd y = small_response();
  const auto r = map_estimate(vacuous_spec(X, y, Prior::flat()));
  const VectorXd ls = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  EXPECT_LT((r.beta_hat - ls).norm(), 1e-9);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.kkt_residual, 1e-7);
}

TEST(MapEstimate, VacuousGaussianIsRidge) {
  const MatrixXd X = small_design();
  const VectorXd y = small_response();
  const double tau2 = 0.5;
  const auto r = map_estimate(vacuous_spec(X, y, Prior::gaussian(tau2)));
  const MatrixXd S = X.transpose() * X + (1.0 / tau2) * MatrixXd::Identity(2, 2);
  EXPECT_LT((r.beta_hat - S.ldlt().solve(X.transpose() * y)).norm(), 1e-9);
}

TEST(MapEstimate, UnivariateBarrierMap) {
  const auto r = map_estimate(univariate_plain(2.0));
  EXPECT_NEAR(r.beta_hat(0), 11.0 / 6.0, 1e-12);
  EXPECT_EQ(r.method, EstimateMethod::map);
}

TEST(MapEstimate, MixturePriorIsRejected) {
  try {
    map_estimate(univariate_plain(2.0, 1.0, Prior::sparse_mixture()));
    FAIL() << "expected unsupported_prior";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unsupported_prior);
  }
}

TEST(ClosedForm, Examples) {
  EXPECT_NEAR(mle_saturated_closed_form(VectorXd::Ones(1), positive_halfline(), 1.0)(0), 0.5,
              1e-15);
  const Polytope orthant(-MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  const VectorXd r = mle_saturated_closed_form((VectorXd(2) << 2.0, 1.0).finished(), orthant, 1.0);
  EXPECT_NEAR(r(0), 11.0 / 6.0, 1e-15);
  EXPECT_NEAR(r(1), 0.5, 1e-15);
  const VectorXd deep = VectorXd::Constant(2, 2000.0);
  EXPECT_LT((mle_saturated_closed_form(deep, orthant, 1.0) - deep).norm(), 1e-5);
}

TEST(ClosedForm, BoundaryIsInfeasible) {
  try {
    mle_saturated_closed_form(VectorXd::Zero(1), positive_halfline(), 1.0);
    FAIL() << "expected infeasible_point";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::infeasible_point);
  }
}

TEST(ClosedForm, ScalesWithSigma) {
  // y + sigma^3 / (y (y + sigma)) reflected: 1-D {z > 0} gives y - sigma^3 / (y (y + sigma)).
  const double s = 0.7;
  EXPECT_NEAR(mle_saturated_closed_form(VectorXd::Constant(1, 1.2), positive_halfline(), s)(0),
              1.2 - s * s * s / (1.2 * (1.2 + s)), 1e-15);
}

TEST(GeneralMle, AgreesWithClosedFormInTheSaturatedModel) {
  std::mt19937 gen(41);
  for (int trial = 0; trial < 10; ++trial) {
    const PosteriorSpec spec = random_lasso_spec(gen, Regime::plain, true);
    const auto r = general_mle(spec);
    const VectorXd closed = mle_saturated_closed_form(spec.y, spec.ctx.polytope, 1.0);
    ASSERT_LT((r.beta_hat - closed).norm(), 1e-6) << "trial " << trial;
  }
}

TEST(GeneralMle, VacuousIsLeastSquares) {
  const MatrixXd X = small_design();
  const VectorXd y = small_response();
  const auto r = general_mle(vacuous_spec(X, y, Prior::flat()));
  EXPECT_LT((r.beta_hat - (X.transpose() * X).ldlt().solve(X.transpose() * y)).norm(), 1e-9);
}

TEST(GeneralMle, ResidualCertificateOnSelectedModels) {
  std::mt19937 gen(42);
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = general_mle(random_lasso_spec(gen, Regime::plain, false));
    ASSERT_TRUE(r.converged) << "trial " << trial;
    ASSERT_LT(r.kkt_residual, 1e-7) << "trial " << trial;
  }
}

TEST(RandomizedMle, SatisfiesTheUnivariateFixedPoint) {
  for (double y : {-1.0, 0.2, 0.5, 1.0, 2.5}) {
    const double b = randomized_mle(univariate_randomized(y, 1.0)).beta_hat(0);
    const double z = 2.0 * y - b;
    ASSERT_NEAR(b, 2.0 * (z / 2.0 - std::sqrt(2.0) / (z * (z + std::sqrt(2.0)))), 1e-9) << y;
  }
}

TEST(RandomizedMle, DeepInteriorIsIdentity) {
  EXPECT_NEAR(randomized_mle(univariate_randomized(500.0, 1.0)).beta_hat(0), 500.0, 1e-4);
}

TEST(RandomizedMle, MatchesGridMaximization) {
  const double y = 0.5;
  const auto [best, value] = oracle_support::grid_minimize(
      [&](double b) { return 0.5 * (y - b) * (y - b) - univariate_h(b, 2.0); }, -3.0, 2.0, 1e-4);
  EXPECT_NEAR(randomized_mle(univariate_randomized(y, 1.0)).beta_hat(0), best, 1e-3);
  EXPECT_TRUE(std::isfinite(value));
}

TEST(RandomizedMle, PlainRegimeIsWrongRegime) {
  try {
    randomized_mle(univariate_plain(1.0));
    FAIL() << "expected wrong_regime";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::wrong_regime);
  }
}

TEST(RandomizedMle, SelectedModelCertificate) {
  std::mt19937 gen(43);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = randomized_mle(random_lasso_spec(gen, Regime::randomized, false));
    ASSERT_TRUE(r.converged);
    ASSERT_LT(r.kkt_residual, 1e-7);
  }
}

TEST(Shrinkage, NonrandomizedAndRandomizedDirections) {
  double previous = INFINITY;
  for (double y = 3.0; y >= 0.01; y -= 0.01) {
    const double b = map_estimate(univariate_plain(y)).beta_hat(0);
    ASSERT_LT(b, y);
    ASSERT_LT(b, previous);
    previous = b;
  }
  EXPECT_LT(previous, -50.0);
  EXPECT_LT(std::abs(map_estimate(univariate_plain(50.0)).beta_hat(0) - 50.0), 1e-3);
  // Randomization moderates shrinkage near the boundary. Far from it the randomized gap
  // decays like sqrt(2) / y^2 against 1 / y^2, so the two gaps cross near y = 1.6513.
  auto gaps = [](double y) {
    const double plain = std::abs(map_estimate(univariate_plain(y)).beta_hat(0) - y);
    const double randomized = std::abs(randomized_mle(univariate_randomized(y, 1.0)).beta_hat(0) - y);
    return std::pair{plain, randomized};
  };
  for (double y = 0.2; y <= 1.6; y += 0.05) {
    const auto [plain, randomized] = gaps(y);
    ASSERT_LT(randomized, plain) << y;
  }
  const auto [plain_far, randomized_far] = gaps(1.7);
  EXPECT_GT(randomized_far, plain_far);
  EXPECT_TRUE(std::isfinite(randomized_mle(univariate_randomized(-3.0, 1.0)).beta_hat(0)));
}

TEST(Shrinkage, ApproximateMleApproachesTheExactOne) {
  // Reference gaps from an independent root solve of y = b + phi(b) / Phi(b).
  EXPECT_NEAR(exact_univariate_mle(3.0) - map_estimate(univariate_plain(3.0)).beta_hat(0),
              0.0788351569535628, 1e-9);
  EXPECT_NEAR(exact_univariate_mle(4.0) - map_estimate(univariate_plain(4.0)).beta_hat(0),
              0.04986609383008744, 1e-9);
  double previous = INFINITY;
  for (double y = 3.0; y <= 8.0; y += 0.25) {
    const double gap = std::abs(map_estimate(univariate_plain(y)).beta_hat(0) - exact_univariate_mle(y));
    ASSERT_LT(gap, previous) << y;
    if (y >= 4.0) ASSERT_LE(gap, 0.05) << y;
    previous = gap;
  }
}

TEST(ChernoffDegeneracy, InteriorUnadjustedFitIsReturned) {
  std::mt19937 gen(44);
  for (int trial = 0; trial < 50; ++trial) {
    PosteriorSpec spec = random_lasso_spec(gen, Regime::plain, true);
    spec.adjustment = AdjustmentMethod::chernoff;
    ASSERT_TRUE(spec.ctx.polytope.strictly_contains(spec.y));
    const auto r = map_estimate(spec);
    ASSERT_LT((r.beta_hat - spec.y).norm(), 1e-9) << "trial " << trial;
  }
}

TEST(Convexity, NegatedLogPosteriorMidpoint) {
  std::mt19937 gen(45);
  std::normal_distribution<double> normal;
  int chords = 0;
  for (Regime regime : {Regime::plain, Regime::randomized, Regime::carved}) {
    for (int trial = 0; trial < 34; ++trial) {
      const Prior prior = trial % 2 == 0 ? Prior::flat() : Prior::gaussian(2.0);
      const PosteriorSpec spec = random_lasso_spec(gen, regime, trial % 3 == 0, prior);
      PosteriorEvaluator eval(spec);
      for (int k = 0; k < 2; ++k, ++chords) {
        VectorXd a(eval.parameters());
        VectorXd b(eval.parameters());
        for (Index i = 0; i < a.size(); ++i) {
          a(i) = 2.0 * normal(gen);
          b(i) = 2.0 * normal(gen);
        }
        const double mid = -eval.evaluate(0.5 * (a + b)).value;
        ASSERT_LE(mid, 0.5 * (-eval.evaluate(a).value - eval.evaluate(b).value) + 1e-8);
      }
    }
  }
  EXPECT_GE(chords, 200);
}
