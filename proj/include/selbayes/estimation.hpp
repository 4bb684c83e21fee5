#pragma once

#include "selbayes/posterior.hpp"

namespace selbayes {

enum class EstimateMethod { map, mle, mle_saturated_closed_form, randomized_mle };

struct EstimateResult {
  VectorXd beta_hat;
  // Negated log-posterior at beta_hat (up to the same constant as the posterior).
  double objective_value = 0.0;
  // Norm of the estimating-equation residual, in the units of X_star^T y.
  double kkt_residual = 0.0;
  EstimateMethod method = EstimateMethod::map;
  int iterations = 0;
  bool converged = false;
};

struct DescentOptions {
  // Stop when the scaled gradient falls below this times (1 + ||X_star^T y||).
  double gradient_tolerance = 1e-14;
  int max_iterations = 20000;
  // converged requires kkt_residual below this.
  double certificate_tolerance = 1e-7;
};

// Minimizes -log pi_S(beta | data) by gradient descent with Barzilai-Borwein steps and
// backtracking. The mixture prior is rejected because the problem is then not convex.
EstimateResult map_estimate(const PosteriorSpec& spec, const DescentOptions& options = {});

// Flat-prior selective MLE in the saturated model: y + sigma^2 grad W(y) with
// W(z) = sum_i log1p(sigma / (b_i - a_i^T z)), i.e. y + sum_i sigma^3 a_i / (s_i (s_i + sigma)).
VectorXd mle_saturated_closed_form(const VectorXd& y, const Polytope& P, double sigma);

// Flat-prior MLE solving X_star^T z*(X_adj beta) = X_star^T y; certificate is that residual.
EstimateResult general_mle(const PosteriorSpec& spec, const DescentOptions& options = {});

// Randomized-regime estimator. In the saturated model it solves the fixed point
//   beta = zeta + s2_eff grad W(zeta),  zeta = (s2_eff / sigma2) y - (gamma2 / sigma2) beta
//                                             + s2_eff grad log pi(beta),
// by damped iteration, falling back to bisection (d = 1) or convex descent. Other
// models go straight to convex descent on the randomized posterior.
EstimateResult randomized_mle(const PosteriorSpec& spec, const DescentOptions& options = {});

}  // namespace selbayes
