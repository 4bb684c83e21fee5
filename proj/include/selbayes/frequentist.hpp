#pragma once

#include <optional>
#include <vector>

#include "selbayes/core.hpp"

namespace selbayes {

// Approximate Rao-Blackwellized estimator in the saturated model under Gaussian
// randomization: (1 + sigma2/gamma2) y - (sigma2/gamma2) z*, with z* the barrier
// optimizer at mean y and variance gamma2. init seeds the interior search (defaults to y).
VectorXd umvue_randomized(const VectorXd& y, const Polytope& P, double sigma2, double gamma2,
                          const std::optional<VectorXd>& init = std::nullopt);

// Discretized conditional density of the OLS coefficient T of one selected variable
// given the nuisance statistics and the selection event. log_density is normalized
// so the trapezoid integral of exp(log_density) is 1; points outside the event hold
// -infinity.
struct DensityGrid {
  std::vector<double> t_values;
  std::vector<double> log_density;
  // log of the trapezoid integral of the unnormalized density.
  double log_normalization = 0.0;
  double t_observed = 0.0;
  double conditional_sd = 0.0;

  std::vector<double> density() const;
  // Trapezoid CDF at t, interpolating inside a cell.
  double cdf(double t) const;
};

// j indexes a column of model.X_E(). When grid is empty, 801 points spanning
// +-8 conditional standard deviations around the observed T are used.
DensityGrid umpu_density_grid(const VectorXd& y, Index j, const GenerativeModel& model,
                              const Polytope& P, double beta_null,
                              std::vector<double> grid = {});

// 2 min(F(t_obs), 1 - F(t_obs)) under the trapezoid CDF of g.
double selective_pvalue_from_grid(const DensityGrid& g, double t_obs);

}  // namespace selbayes
