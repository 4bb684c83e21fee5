#include "selbayes/posterior.hpp"

#include <algorithm>
#include <cmath>

#include "selbayes/logging.hpp"

namespace selbayes {

double PosteriorSpec::adjustment_variance() const {
  return regime() == Regime::randomized ? model.sigma2() + ctx.gamma2 : model.sigma2();
}

void PosteriorSpec::validate() const {
  const Index n = model.observations();
  require(y.size() == n, ErrorKind::contract_violation,
          "posterior: y has length " + std::to_string(y.size()) + " but the model has " +
              std::to_string(n) + " observations");
  require(y.allFinite(), ErrorKind::contract_violation, "posterior: non-finite response");
  if (regime() == Regime::carved) {
    const auto& split = *ctx.carve;
    require(static_cast<Index>(split.stage1.size() + split.stage2.size()) == n,
            ErrorKind::contract_violation, "posterior: carving split does not cover the rows");
    require(ctx.polytope.dimension() == static_cast<Index>(split.stage1.size()),
            ErrorKind::contract_violation,
            "posterior: carved polytope must live in the stage-1 space");
  } else {
    require(ctx.polytope.dimension() == n, ErrorKind::contract_violation,
            "posterior: polytope dimension differs from the number of observations");
  }
}

// ---------------------------------------------------------------------------

PosteriorEvaluator::PosteriorEvaluator(const PosteriorSpec& spec)
    : X_star_(spec.model.X_star()),
      y_(spec.y),
      prior_(spec.prior),
      sigma2_(spec.model.sigma2()),
      sigma2_adj_(spec.adjustment_variance()),
      method_(spec.adjustment),
      polytope_(spec.ctx.polytope) {
  spec.validate();
  VectorXd y_adj;
  if (spec.regime() == Regime::carved) {
    X_adj_ = select_rows(X_star_, spec.ctx.carve->stage1);
    y_adj = select_entries(y_, spec.ctx.carve->stage1);
  } else {
    X_adj_ = X_star_;
    y_adj = y_;
  }
  // The selection instrument is interior by construction; fall back to the observed
  // response (plus the stored randomization) when a context was assembled by hand.
  if (spec.ctx.instrument.size() == polytope_.dimension()) {
    init_ = spec.ctx.instrument;
  } else if (spec.regime() == Regime::randomized && spec.ctx.randomization &&
             spec.ctx.randomization->size() == y_adj.size()) {
    init_ = y_adj + *spec.ctx.randomization;
  } else {
    init_ = y_adj;
  }
  if (method_ == AdjustmentMethod::barrier) {
    barrier_ = std::make_unique<BarrierSolver>(polytope_);
  } else {
    projector_ = std::make_unique<AdmmProjector>(polytope_);
  }
}

PosteriorEvaluator::Terms PosteriorEvaluator::evaluate(const VectorXd& beta) {
  require(beta.size() == X_star_.cols(), ErrorKind::contract_violation,
          "posterior: beta has dimension " + std::to_string(beta.size()) + ", model has " +
              std::to_string(X_star_.cols()));
  require(beta.allFinite(), ErrorKind::contract_violation, "posterior: non-finite beta");
  Terms out;
  const VectorXd residual = y_ - X_star_ * beta;
  out.log_likelihood = -0.5 * residual.squaredNorm() / sigma2_;

  const VectorXd mu = X_adj_ * beta;
  VectorXd grad_mu;
  if (method_ == AdjustmentMethod::barrier) {
    const AdjustmentResult adj = barrier_->has_warm_start()
                                     ? barrier_->solve_warm(mu, sigma2_adj_)
                                     : barrier_->solve(mu, sigma2_adj_, init_);
    out.adjustment = adj.h;
    out.z_star = adj.z_star;
    grad_mu = adj.grad_mu;
  } else if (polytope_.contains(mu)) {
    out.z_star = mu;
    grad_mu = VectorXd::Zero(mu.size());
  } else {
    out.z_star = projector_->project(mu);
    grad_mu = (mu - out.z_star) / sigma2_adj_;
    out.adjustment = 0.5 * (mu - out.z_star).squaredNorm() / sigma2_adj_;
  }

  auto [log_prior, grad_prior] = log_prior_and_grad(prior_, beta);
  out.log_prior = log_prior;
  out.value = out.log_likelihood + out.adjustment + out.log_prior;
  out.gradient = X_star_.transpose() * residual / sigma2_ + X_adj_.transpose() * grad_mu + grad_prior;
  return out;
}

std::pair<double, VectorXd> PosteriorEvaluator::operator()(const VectorXd& beta) {
  Terms t = evaluate(beta);
  return {t.value, std::move(t.gradient)};
}

std::pair<double, VectorXd> log_posterior_grad(const PosteriorSpec& spec, const VectorXd& beta) {
  PosteriorEvaluator evaluator(spec);
  return evaluator(beta);
}

// ---------------------------------------------------------------------------

PosteriorChain langevin_sample(const PosteriorSpec& spec, const VectorXd& init, long n_draws,
                               double step, std::uint64_t seed, long burn_in) {
  require(step > 0.0 && std::isfinite(step), ErrorKind::contract_violation,
          "langevin: step must be positive");
  require(init.allFinite(), ErrorKind::contract_violation, "langevin: non-finite init");
  const long burn = burn_in < 0 ? n_draws / 10 : burn_in;
  require(n_draws >= burn + 100, ErrorKind::insufficient_samples,
          "langevin: n_draws must exceed burn-in by at least 100");

  PosteriorEvaluator evaluator(spec);
  require(init.size() == evaluator.parameters(), ErrorKind::contract_violation,
          "langevin: init has the wrong dimension");
  Rng rng(seed);
  PosteriorChain chain;
  chain.draws.resize(init.size(), n_draws);
  chain.burn_in = burn;
  chain.step = step;
  chain.seed = seed;

  const double noise_scale = std::sqrt(2.0 * step);
  VectorXd beta = init;
  VectorXd grad = evaluator.evaluate(beta).gradient;
  for (long k = 0; k < n_draws; ++k) {
    beta += step * grad + noise_scale * rng.normal_vector(beta.size());
    if (!beta.allFinite()) {
      throw DivergenceError("langevin: non-finite iterate", static_cast<std::size_t>(k));
    }
    grad = evaluator.evaluate(beta).gradient;
    if (!grad.allFinite()) {
      throw DivergenceError("langevin: non-finite gradient", static_cast<std::size_t>(k));
    }
    chain.draws.col(k) = beta;
  }
  return chain;
}

double default_step(const PosteriorSpec& spec, double scale) {
  const MatrixXd& X = spec.model.X_star();
  const MatrixXd gram = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lambda_max = eig.eigenvalues().maxCoeff();
  require(lambda_max > 0.0, ErrorKind::degenerate_design, "default_step: X_star is zero");
  return (scale > 0.0 ? scale : 0.5) * spec.model.sigma2() / lambda_max;
}

VectorXd default_init(const PosteriorSpec& spec) {
  const MatrixXd& X = spec.model.X_star();
  return X.completeOrthogonalDecomposition().solve(spec.y);
}

PosteriorChain sample_posterior(const PosteriorSpec& spec, std::uint64_t seed,
                                const SamplerOptions& options) {
  double step = default_step(spec, options.step_scale);
  const VectorXd init = default_init(spec);
  for (int attempt = 0;; ++attempt) {
    try {
      return langevin_sample(spec, init, options.n_draws, step, seed, options.burn_in);
    } catch (const Error& e) {
      const bool retry = e.kind() == ErrorKind::divergence || e.kind() == ErrorKind::convergence;
      if (!retry || attempt >= options.max_halvings) throw;
      logging::warn("langevin: {}; halving step to {}", e.what(), 0.5 * step);
      step *= 0.5;
    }
  }
}

// ---------------------------------------------------------------------------

double empirical_quantile(const std::vector<double>& sorted, double q) {
  require(!sorted.empty(), ErrorKind::insufficient_samples, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

namespace {

MatrixXd mapped_draws(const PosteriorChain& chain, const TargetMap& M) {
  require(chain.kept() >= 100, ErrorKind::insufficient_samples,
          "posterior summary needs at least 100 post-burn-in draws, chain has " +
              std::to_string(chain.kept()));
  require(M.M.cols() == chain.draws.rows(), ErrorKind::contract_violation,
          "posterior summary: target map does not match the chain dimension");
  return M.M * chain.draws.rightCols(chain.kept());
}

}  // namespace

std::vector<Interval> credible_interval(const PosteriorChain& chain, const TargetMap& M,
                                        double level) {
  require(level > 0.0 && level < 1.0, ErrorKind::contract_violation,
          "credible_interval: level must lie in (0, 1)");
  const MatrixXd mapped = mapped_draws(chain, M);
  const double alpha = 1.0 - level;
  std::vector<Interval> out;
  std::vector<double> row(static_cast<std::size_t>(mapped.cols()));
  for (Index j = 0; j < mapped.rows(); ++j) {
    for (Index k = 0; k < mapped.cols(); ++k) row[static_cast<std::size_t>(k)] = mapped(j, k);
    std::sort(row.begin(), row.end());
    out.push_back({empirical_quantile(row, 0.5 * alpha), empirical_quantile(row, 1.0 - 0.5 * alpha)});
  }
  return out;
}

VectorXd posterior_mean(const PosteriorChain& chain, const TargetMap& M) {
  return mapped_draws(chain, M).rowwise().mean();
}

}  // namespace selbayes
