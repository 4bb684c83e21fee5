#pragma once

#include "selbayes/core.hpp"
#include "selbayes/rng.hpp"

namespace selbayes {

// Standard normal primitives. The CDF goes through std::erfc, which is accurate to a
// few ulps on the whole line and avoids the cancellation of 1 - erf.
double normal_pdf(double x);
double normal_log_pdf(double x);
double normal_cdf(double x);
// Mills ratio (1 - Phi(a)) / phi(a) for a > 0; continued fraction beyond a = 8.
double mills_ratio(double a);
// log(1 - Phi(a)), finite for every finite a.
double normal_log_survival(double a);
double normal_log_cdf(double x);
// phi(x) / Phi(x), stable for very negative x.
double inverse_mills(double x);
// The z with log(1 - Phi(z)) = target, for target <= 0.
double normal_log_survival_inverse(double target);
double normal_quantile(double p);

// log P(Y > c) for Y ~ N(mu, sigma^2).
double exact_univariate_log_survival(double mu, double sigma, double c);

// Draw from N(mean, sd^2) conditioned on exceeding lower, by inversion in log space
// so the far tail stays exact.
double sample_truncated_normal_above(double mean, double sd, double lower, Rng& rng);

// Exact selective MLE for Y ~ N(beta, 1) observed on {Y > 0}: the root of
// y = beta + phi(beta) / Phi(beta).
double exact_univariate_mle(double y);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
  long n_accepted = 0;
};

// Fraction of N(mu, sigma2_eff I) draws inside P, with its binomial standard error
// (3 / N when no draw lands inside).
McEstimate mc_adjustment(const VectorXd& mu, const Polytope& P, double sigma2_eff, long N,
                         Rng& rng);

struct McMoment {
  VectorXd mean;
  VectorXd std_error;
  long n_samples = 0;
  long n_accepted = 0;
};

// E(W | y + W in P) for W ~ N(0, gamma2 I) by rejection sampling. Stops after N accepted
// draws or 10 N proposals; fewer than 100 acceptances is a low_acceptance error.
McMoment mc_truncated_moment(const VectorXd& y, const Polytope& P, double gamma2, long N,
                             Rng& rng);

}  // namespace selbayes
