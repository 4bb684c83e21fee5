#include "selbayes/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace selbayes {

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double kkt_violation(double beta_j, double corr_j, double lambda) {
  if (beta_j > 0.0) return std::abs(corr_j - lambda);
  if (beta_j < 0.0) return std::abs(corr_j + lambda);
  return std::max(std::abs(corr_j) - lambda, 0.0);
}

}  // namespace

double lasso_objective(const MatrixXd& X, const VectorXd& y, const VectorXd& beta, double lambda) {
  return 0.5 * (y - X * beta).squaredNorm() + lambda * beta.lpNorm<1>();
}

LassoFit lasso_solve(const MatrixXd& X, const VectorXd& y, double lambda,
                     const LassoOptions& options) {
  require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::contract_violation,
          "lasso: lambda must be positive");
  require(X.rows() == y.size(), ErrorKind::contract_violation,
          "lasso: X has " + std::to_string(X.rows()) + " rows but y has length " +
              std::to_string(y.size()));
  require(X.allFinite() && y.allFinite(), ErrorKind::contract_violation,
          "lasso: non-finite data");

  const Index p = X.cols();
  const VectorXd col_sq = X.colwise().squaredNorm();
  LassoFit fit;
  fit.beta = VectorXd::Zero(p);
  VectorXd residual = y;
  VectorXd corr(p);

  bool converged = false;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    for (Index j = 0; j < p; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double old = fit.beta(j);
      const double rho = X.col(j).dot(residual) + col_sq(j) * old;
      const double updated = soft_threshold(rho, lambda) / col_sq(j);
      if (updated != old) {
        residual.noalias() -= (updated - old) * X.col(j);
        fit.beta(j) = updated;
      }
    }
    fit.sweeps = sweep + 1;
    fit.objective_trace.push_back(0.5 * residual.squaredNorm() + lambda * fit.beta.lpNorm<1>());

    corr.noalias() = X.transpose() * residual;
    double worst = 0.0;
    for (Index j = 0; j < p; ++j) worst = std::max(worst, kkt_violation(fit.beta(j), corr(j), lambda));
    if (worst / lambda < options.kkt_tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceError("lasso: coordinate descent did not reach the KKT tolerance", 0.0);
  }

  // Recompute the residual from scratch before certifying.
  residual = y - X * fit.beta;
  corr.noalias() = X.transpose() * residual;
  for (Index j = 0; j < p; ++j) {
    if (std::abs(fit.beta(j)) <= options.zero_threshold * lambda) fit.beta(j) = 0.0;
  }
  for (Index j = 0; j < p; ++j) {
    if (std::abs(corr(j)) > lambda * (1.0 + 1e-6)) {
      throw ConvergenceError("lasso: subgradient bound violated after convergence",
                             std::abs(corr(j)) / lambda - 1.0);
    }
    if (fit.beta(j) != 0.0) {
      if (std::abs(corr(j) - lambda * (fit.beta(j) > 0 ? 1.0 : -1.0)) > 1e-6 * lambda) {
        throw ConvergenceError("lasso: active KKT equality violated", 0.0);
      }
      fit.E.push_back(j);
    } else if (std::abs(corr(j)) >= lambda * (1.0 - options.boundary_margin)) {
      fit.boundary_warning = true;
    }
  }
  fit.signs.resize(static_cast<Index>(fit.E.size()));
  for (std::size_t k = 0; k < fit.E.size(); ++k) {
    fit.signs(static_cast<Index>(k)) = fit.beta(fit.E[k]) > 0.0 ? 1.0 : -1.0;
  }
  return fit;
}

LassoFit lasso_fit(const MatrixXd& X, const VectorXd& y, double lambda,
                   const LassoOptions& options) {
  LassoFit fit = lasso_solve(X, y, lambda, options);
  require(!fit.E.empty(), ErrorKind::empty_selection,
          "lasso selected no variables; selective inference is undefined");
  return fit;
}

Polytope lasso_polytope(const MatrixXd& X, const std::vector<Index>& E, const VectorXd& signs,
                        double lambda) {
  require(!E.empty(), ErrorKind::empty_selection, "lasso_polytope: empty active set");
  require(static_cast<Index>(E.size()) == signs.size(), ErrorKind::contract_violation,
          "lasso_polytope: signs length differs from |E|");
  const Index n = X.rows();
  const Index p = X.cols();
  const Index k = static_cast<Index>(E.size());

  std::vector<bool> active(static_cast<std::size_t>(p), false);
  for (Index j : E) {
    require(j >= 0 && j < p, ErrorKind::contract_violation, "lasso_polytope: index out of range");
    active[static_cast<std::size_t>(j)] = true;
  }
  std::vector<Index> inactive;
  for (Index j = 0; j < p; ++j) {
    if (!active[static_cast<std::size_t>(j)]) inactive.push_back(j);
  }

  const MatrixXd X_E = select_columns(X, E);
  require(has_full_column_rank(X_E), ErrorKind::degenerate_design,
          "lasso_polytope: X_E is rank deficient");
  // pinv_E = (X_E^T X_E)^{-1} X_E^T, so beta_hat_E = pinv_E y - lambda G s.
  const MatrixXd pinv_E = solve_normal_equations(X_E, X_E.transpose());
  const VectorXd Gs = solve_normal_equations(X_E, signs);

  const Index q = static_cast<Index>(inactive.size());
  MatrixXd A(k + 2 * q, n);
  VectorXd b(k + 2 * q);

  A.topRows(k) = -(signs.asDiagonal() * pinv_E);
  b.head(k) = -lambda * signs.cwiseProduct(Gs);

  if (q > 0) {
    const MatrixXd X_I = select_columns(X, inactive);
    const MatrixXd U = X_I.transpose() - (X_I.transpose() * X_E) * pinv_E;
    const VectorXd c = lambda * (X_I.transpose() * X_E) * Gs;
    A.middleRows(k, q) = U;
    b.segment(k, q) = VectorXd::Constant(q, lambda) - c;
    A.bottomRows(q) = -U;
    b.tail(q) = VectorXd::Constant(q, lambda) + c;
    for (Index i = 0; i < q; ++i) {
      require(U.row(i).norm() > 1e-12 * (1.0 + X_I.col(i).norm()), ErrorKind::degenerate_design,
              "lasso_polytope: inactive column lies in the span of X_E");
    }
  }
  return Polytope(std::move(A), std::move(b));
}

std::pair<VectorXd, VectorXd> randomize(const VectorXd& y, double gamma2, Rng& rng) {
  require(gamma2 >= 0.0 && std::isfinite(gamma2), ErrorKind::contract_violation,
          "randomize: gamma2 must be nonnegative");
  VectorXd w = std::sqrt(gamma2) * rng.normal_vector(y.size());
  VectorXd y_star = y + w;
  return {std::move(y_star), std::move(w)};
}

CarveSplit carve_split(Index n, double holdout_fraction, Rng& rng) {
  require(holdout_fraction > 0.0 && holdout_fraction < 1.0, ErrorKind::invalid_split,
          "carve_split: holdout fraction must lie in (0, 1)");
  const Index n2 = static_cast<Index>(std::llround(holdout_fraction * static_cast<double>(n)));
  const Index n1 = n - n2;
  require(n1 >= 2 && n2 >= 1, ErrorKind::invalid_split,
          "carve_split: split sizes n1=" + std::to_string(n1) + ", n2=" + std::to_string(n2) +
              " are degenerate");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  CarveSplit split;
  split.stage2.assign(perm.begin(), perm.begin() + n2);
  split.stage1.assign(perm.begin() + n2, perm.end());
  std::sort(split.stage1.begin(), split.stage1.end());
  std::sort(split.stage2.begin(), split.stage2.end());
  return split;
}

Regime SelectionContext::regime() const {
  if (carve) return Regime::carved;
  if (gamma2 > 0.0) return Regime::randomized;
  return Regime::plain;
}

void SelectionContext::validate(Index p) const {
  require(!E.empty(), ErrorKind::contract_violation, "selection context: empty E");
  for (std::size_t k = 0; k < E.size(); ++k) {
    require(E[k] >= 0 && E[k] < p, ErrorKind::contract_violation,
            "selection context: index out of range");
    require(k == 0 || E[k] > E[k - 1], ErrorKind::contract_violation,
            "selection context: E must be strictly increasing");
  }
  require(signs.size() == static_cast<Index>(E.size()), ErrorKind::contract_violation,
          "selection context: signs length differs from |E|");
  for (Index k = 0; k < signs.size(); ++k) {
    require(signs(k) == 1.0 || signs(k) == -1.0, ErrorKind::contract_violation,
            "selection context: signs must be +-1");
  }
  require(lambda > 0.0, ErrorKind::contract_violation, "selection context: lambda must be > 0");
  require(gamma2 >= 0.0, ErrorKind::contract_violation, "selection context: gamma2 < 0");
  if (carve) {
    require(polytope.dimension() == static_cast<Index>(carve->stage1.size()),
            ErrorKind::contract_violation,
            "selection context: polytope must live in the stage-1 response space");
  }
  if (gamma2 > 0.0 && randomization) {
    require(randomization->size() == polytope.dimension(), ErrorKind::contract_violation,
            "selection context: randomization length differs from polytope dimension");
  }
  require(instrument.size() == polytope.dimension(), ErrorKind::contract_violation,
          "selection context: instrument length differs from polytope dimension");
}

namespace {

SelectionContext build_context(const MatrixXd& X, const VectorXd& instrument, double lambda,
                               const LassoOptions& options) {
  const LassoFit fit = lasso_fit(X, instrument, lambda, options);
  SelectionContext ctx;
  ctx.E = fit.E;
  ctx.signs = fit.signs;
  ctx.lambda = lambda;
  ctx.polytope = lasso_polytope(X, fit.E, fit.signs, lambda);
  ctx.instrument = instrument;
  ctx.boundary_warning = fit.boundary_warning;
  return ctx;
}

}  // namespace

SelectionContext select_plain(const MatrixXd& X, const VectorXd& y, double lambda,
                              const LassoOptions& options) {
  SelectionContext ctx = build_context(X, y, lambda, options);
  ctx.validate(X.cols());
  return ctx;
}

SelectionContext select_randomized(const MatrixXd& X, const VectorXd& y, double lambda,
                                   double gamma2, Rng& rng, const LassoOptions& options) {
  require(gamma2 > 0.0, ErrorKind::wrong_regime, "randomized selection requires gamma2 > 0");
  auto [y_star, w] = randomize(y, gamma2, rng);
  SelectionContext ctx = build_context(X, y_star, lambda, options);
  ctx.gamma2 = gamma2;
  ctx.randomization = std::move(w);
  ctx.validate(X.cols());
  return ctx;
}

SelectionContext select_carved(const MatrixXd& X, const VectorXd& y, double lambda,
                               double holdout_fraction, Rng& rng, const LassoOptions& options) {
  require(X.rows() == y.size(), ErrorKind::contract_violation,
          "carved selection: X and y row counts differ");
  CarveSplit split = carve_split(X.rows(), holdout_fraction, rng);
  const MatrixXd X1 = select_rows(X, split.stage1);
  const VectorXd y1 = select_entries(y, split.stage1);
  SelectionContext ctx = build_context(X1, y1, lambda, options);
  ctx.carve = std::move(split);
  ctx.validate(X.cols());
  return ctx;
}

}  // namespace selbayes
