#include "selbayes/estimation.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "selbayes/logging.hpp"

namespace selbayes {

namespace {

void require_log_concave(const Prior& prior) {
  require(prior.is_log_concave(), ErrorKind::unsupported_prior,
          "point estimation needs a log-concave prior; the mixture prior is supported only "
          "through posterior sampling");
}

bool is_identity(const MatrixXd& M) {
  return M.rows() == M.cols() && M.isIdentity(0.0);
}

double gradient_floor(const PosteriorSpec& spec, const DescentOptions& options) {
  return options.gradient_tolerance * (1.0 + (spec.model.X_star().transpose() * spec.y).norm());
}

// Minimizes f = -log pi_S from start.
EstimateResult descend(const PosteriorSpec& spec, VectorXd x, const DescentOptions& options) {
  PosteriorEvaluator evaluator(spec);
  const double sigma2 = spec.model.sigma2();
  const double floor = gradient_floor(spec, options);
  const double t0 = default_step(spec, 1.0);

  auto eval = [&](const VectorXd& beta, VectorXd& grad) {
    auto [value, g] = evaluator(beta);
    grad = -g;
    return -value;
  };

  VectorXd g;
  double f = eval(x, g);
  double t_bb = t0;
  EstimateResult out;
  out.method = EstimateMethod::map;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const double gnorm = g.norm();
    if (!(gnorm * sigma2 > floor)) break;

    VectorXd x_new;
    VectorXd g_new;
    double f_new = 0.0;
    bool accepted = false;
    double t = t_bb;
    // Below this the predicted decrease drowns in the rounding of f and Armijo would
    // accept steps on noise.
    const bool f_resolves = t_bb * gnorm * gnorm > 1e-10 * (1.0 + std::abs(f));
    for (int ls = 0; f_resolves && ls < 60 && !accepted; ++ls, t *= 0.5) {
      x_new = x - t * g;
      try {
        f_new = eval(x_new, g_new);
      } catch (const ConvergenceError&) {
        continue;
      }
      accepted = std::isfinite(f_new) && f_new <= f - 1e-4 * t * gnorm * gnorm;
    }
    if (!accepted) {
      // Function values no longer resolve the decrease near the optimum; accept the
      // longest trial step that still shrinks the gradient.
      t = t_bb;
      for (int ls = 0; ls < 60 && !accepted; ++ls, t *= 0.5) {
        x_new = x - t * g;
        try {
          f_new = eval(x_new, g_new);
        } catch (const ConvergenceError&) {
          continue;
        }
        accepted = g_new.allFinite() && g_new.norm() < gnorm;
      }
    }
    if (!accepted) break;

    const VectorXd s = x_new - x;
    const VectorXd dy = g_new - g;
    const double sy = s.dot(dy);
    t_bb = sy > 0.0 ? s.squaredNorm() / sy : t0;
    x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
  }
  if (!x.allFinite()) throw ConvergenceError("map_estimate: iterate diverged", g.norm());
  out.beta_hat = x;
  out.objective_value = f;
  out.kkt_residual = g.norm() * sigma2;
  out.iterations = it;
  out.converged = out.kkt_residual < options.certificate_tolerance;
  return out;
}

}  // namespace

EstimateResult map_estimate(const PosteriorSpec& spec, const DescentOptions& options) {
  require_log_concave(spec.prior);
  spec.validate();
  EstimateResult out = descend(spec, default_init(spec), options);
  if (!out.converged) {
    throw ConvergenceError("map_estimate: estimating-equation residual " +
                               std::to_string(out.kkt_residual) + " above tolerance",
                           out.kkt_residual);
  }
  return out;
}

VectorXd mle_saturated_closed_form(const VectorXd& y, const Polytope& P, double sigma) {
  require(sigma > 0.0, ErrorKind::contract_violation, "closed-form MLE: sigma must be positive");
  const VectorXd s = P.slack(y);
  require(P.strictly_contains(y), ErrorKind::infeasible_point,
          "closed-form MLE: y must be strictly inside the selection event");
  const VectorXd weights = (sigma * sigma * sigma) / (s.array() * (s.array() + sigma));
  return y + P.A().transpose() * weights;
}

EstimateResult general_mle(const PosteriorSpec& spec, const DescentOptions& options) {
  require(spec.prior.is_flat(), ErrorKind::unsupported_prior,
          "general_mle is defined for the flat prior");
  EstimateResult out = map_estimate(spec, options);
  out.method = EstimateMethod::mle;
  return out;
}

namespace {

// grad W at z for W(z) = sum log1p(sigma_eff / slack); empty optional off the interior.
std::optional<VectorXd> barrier_gradient(const Polytope& P, const VectorXd& z, double sigma_eff) {
  const VectorXd s = P.slack(z);
  if (s.size() > 0 && !(s.minCoeff() > 0.0)) return std::nullopt;
  const VectorXd weights = sigma_eff / (s.array() * (s.array() + sigma_eff));
  return VectorXd(P.A().transpose() * weights);
}

EstimateResult bisect_1d(const PosteriorSpec& spec, const DescentOptions& options) {
  PosteriorEvaluator evaluator(spec);
  // G = d/dbeta of -log pi_S, increasing by convexity.
  auto G = [&](double beta) { return -evaluator(VectorXd::Constant(1, beta)).second(0); };
  const double center = default_init(spec)(0);
  double width = std::sqrt(spec.model.sigma2());
  double lo = center - width;
  double hi = center + width;
  for (int k = 0; k < 200 && G(lo) > 0.0; ++k) lo = center - (width *= 2.0);
  width = std::sqrt(spec.model.sigma2());
  for (int k = 0; k < 200 && G(hi) < 0.0; ++k) hi = center + (width *= 2.0);
  int it = 0;
  for (; it < 400 && hi - lo > 1e-15 * (1.0 + std::abs(hi) + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (G(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  EstimateResult out;
  out.beta_hat = VectorXd::Constant(1, 0.5 * (lo + hi));
  auto [value, grad] = evaluator(out.beta_hat);
  out.objective_value = -value;
  out.kkt_residual = grad.norm() * spec.model.sigma2();
  out.iterations = it;
  out.converged = out.kkt_residual < options.certificate_tolerance;
  return out;
}

}  // namespace

EstimateResult randomized_mle(const PosteriorSpec& spec, const DescentOptions& options) {
  require(spec.regime() == Regime::randomized, ErrorKind::wrong_regime,
          "randomized_mle requires a randomized selection context (gamma2 > 0)");
  require_log_concave(spec.prior);
  spec.validate();

  const double sigma2 = spec.model.sigma2();
  const double gamma2 = spec.ctx.gamma2;
  const double s2_eff = sigma2 + gamma2;
  const double sigma_eff = std::sqrt(s2_eff);
  const Polytope& P = spec.ctx.polytope;
  const VectorXd& y = spec.y;

  if (is_identity(spec.model.X_star())) {
    auto zeta_of = [&](const VectorXd& beta) {
      const VectorXd grad_prior = log_prior_and_grad(spec.prior, beta).second;
      return VectorXd((s2_eff / sigma2) * y - (gamma2 / sigma2) * beta + s2_eff * grad_prior);
    };
    auto residual_of = [&](const VectorXd& beta) -> std::optional<VectorXd> {
      const VectorXd zeta = zeta_of(beta);
      auto gW = barrier_gradient(P, zeta, sigma_eff);
      if (!gW) return std::nullopt;
      return VectorXd(zeta + s2_eff * *gW - beta);
    };

    // Start where zeta equals the selection instrument, which is interior.
    VectorXd beta = spec.ctx.instrument.size() == y.size()
                        ? VectorXd((s2_eff * y - sigma2 * spec.ctx.instrument) / gamma2)
                        : y;
    bool solved = false;
    int it = 0;
    for (; it < 2000; ++it) {
      auto r = residual_of(beta);
      if (!r) break;
      if (r->norm() <= 1e-13 * (1.0 + beta.norm())) {
        solved = true;
        break;
      }
      beta += 0.5 * *r;
      if (!beta.allFinite()) break;
    }
    if (solved) {
      EstimateResult out;
      out.method = EstimateMethod::randomized_mle;
      out.beta_hat = beta;
      out.kkt_residual = residual_of(beta)->norm();
      out.iterations = it;
      out.converged = out.kkt_residual < options.certificate_tolerance;
      PosteriorEvaluator evaluator(spec);
      out.objective_value = -evaluator(beta).first;
      return out;
    }
    logging::debug("randomized_mle: damped fixed point failed after {} iterations", it);
    if (y.size() == 1) {
      EstimateResult out = bisect_1d(spec, options);
      out.method = EstimateMethod::randomized_mle;
      if (!out.converged) {
        throw ConvergenceError("randomized_mle: bisection residual above tolerance",
                               out.kkt_residual);
      }
      return out;
    }
  }
  EstimateResult out = map_estimate(spec, options);
  out.method = EstimateMethod::randomized_mle;
  return out;
}

}  // namespace selbayes
