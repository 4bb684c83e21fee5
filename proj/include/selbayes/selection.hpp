#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "selbayes/core.hpp"
#include "selbayes/rng.hpp"

namespace selbayes {

struct LassoOptions {
  // Stop once the largest KKT violation, scaled by lambda, falls below this.
  double kkt_tolerance = 1e-9;
  // Coefficients with |beta_j| <= zero_threshold * lambda count as inactive.
  double zero_threshold = 1e-8;
  // Inactive coordinates this close to the subgradient bound raise a warning.
  double boundary_margin = 1e-6;
  int max_sweeps = 100000;
};

struct LassoFit {
  std::vector<Index> E;
  VectorXd signs;
  VectorXd beta;
  int sweeps = 0;
  // Objective value after each full sweep; nonincreasing.
  std::vector<double> objective_trace;
  bool boundary_warning = false;
};

double lasso_objective(const MatrixXd& X, const VectorXd& y, const VectorXd& beta, double lambda);

// Minimizes 0.5||y - X beta||^2 + lambda ||beta||_1 by cyclic coordinate descent.
// Throws empty_selection when no coordinate is active.
LassoFit lasso_fit(const MatrixXd& X, const VectorXd& y, double lambda,
                   const LassoOptions& options = {});

// Solution of the same problem that may be empty; used where an empty active set is
// an ordinary outcome (experiments, round-trip checks).
LassoFit lasso_solve(const MatrixXd& X, const VectorXd& y, double lambda,
                     const LassoOptions& options = {});

// {y : A y <= b} = {y : Lasso(X, y, lambda) selects exactly E with the given signs}.
// Rows: |E| sign constraints followed by upper and lower subgradient bounds for
// every inactive variable (in increasing index order).
Polytope lasso_polytope(const MatrixXd& X, const std::vector<Index>& E, const VectorXd& signs,
                        double lambda);

// w ~ N(0, gamma2 I) and y_star = y + w.
std::pair<VectorXd, VectorXd> randomize(const VectorXd& y, double gamma2, Rng& rng);

struct CarveSplit {
  std::vector<Index> stage1;
  std::vector<Index> stage2;
};

// Uniformly random partition with |stage2| = round(holdout_fraction * n); both sorted.
CarveSplit carve_split(Index n, double holdout_fraction, Rng& rng);

enum class Regime { plain, randomized, carved };

struct SelectionContext {
  std::vector<Index> E;
  VectorXd signs;
  Polytope polytope = Polytope::whole_space(0);
  double lambda = 0.0;
  double gamma2 = 0.0;
  std::optional<VectorXd> randomization;
  std::optional<CarveSplit> carve;
  // The vector the Lasso actually ran on: y, y + w, or the stage-1 response.
  // It lies strictly inside the polytope and seeds the barrier solver.
  VectorXd instrument;
  bool boundary_warning = false;

  Regime regime() const;
  // Checks the structural invariants; throws contract_violation.
  void validate(Index p) const;
};

SelectionContext select_plain(const MatrixXd& X, const VectorXd& y, double lambda,
                              const LassoOptions& options = {});
SelectionContext select_randomized(const MatrixXd& X, const VectorXd& y, double lambda,
                                   double gamma2, Rng& rng, const LassoOptions& options = {});
SelectionContext select_carved(const MatrixXd& X, const VectorXd& y, double lambda,
                               double holdout_fraction, Rng& rng,
                               const LassoOptions& options = {});

}  // namespace selbayes
