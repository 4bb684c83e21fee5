#include "selbayes/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "selbayes/adjustment.hpp"
#include "selbayes/estimation.hpp"
#include "selbayes/logging.hpp"
#include "selbayes/oracle.hpp"
#include "selbayes/parallel.hpp"
#include "selbayes/posterior.hpp"
#include "selbayes/selection.hpp"

namespace selbayes {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream indices under a round seed.
enum Stream : std::uint64_t {
  kData = 0,
  kRandomization = 1,
  kCarving = 2,
  kChainAdjusted = 3,
  kChainRandomized = 4,
  kChainCarved = 5,
};

void score(MethodRound& out, const VectorXd& target, const std::vector<Interval>& intervals) {
  const std::size_t k = intervals.size();
  out.covered.resize(k);
  out.lengths.resize(k);
  std::size_t misses = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double t = target(static_cast<Index>(i));
    out.covered[i] = intervals[i].lower <= t && t <= intervals[i].upper;
    out.lengths[i] = intervals[i].upper - intervals[i].lower;
    if (!out.covered[i]) ++misses;
  }
  out.noncoverage = k == 0 ? 0.0 : static_cast<double>(misses) / static_cast<double>(k);
}

std::vector<Interval> normal_intervals(const VectorXd& center, const MatrixXd& cov, double z) {
  std::vector<Interval> out;
  for (Index i = 0; i < center.size(); ++i) {
    const double half = z * std::sqrt(cov(i, i));
    out.push_back({center(i) - half, center(i) + half});
  }
  return out;
}

VectorXd selected_target(const MatrixXd& X, const std::vector<Index>& E, const VectorXd& beta) {
  return target_map(E, X, X).apply(beta);
}

MethodRound posterior_round(const FcrConfig& cfg, const MatrixXd& X, const VectorXd& y,
                            const VectorXd& beta, SelectionContext ctx, std::uint64_t chain_seed) {
  MethodRound out;
  out.E = ctx.E;
  PosteriorSpec spec{GenerativeModel::selected(cfg.sigma2, select_columns(X, ctx.E)),
                     Prior::flat(), std::move(ctx), y};
  SamplerOptions options;
  options.n_draws = cfg.n_draws;
  options.burn_in = cfg.burn_in;
  options.step_scale = cfg.step_scale;
  const PosteriorChain chain = sample_posterior(spec, chain_seed, options);
  const auto intervals =
      credible_interval(chain, TargetMap::identity(static_cast<Index>(out.E.size())), cfg.level);
  score(out, selected_target(X, out.E, beta), intervals);
  return out;
}

template <typename Fn>
MethodRound skip_on_empty(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::empty_selection) throw;
    MethodRound skipped;
    skipped.skipped = true;
    return skipped;
  }
}

FcrRound run_round(const FcrConfig& cfg, const MatrixXd& X, const MatrixXd& full_cov, long r) {
  const std::uint64_t round_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r) + 1);
  Rng data_rng(derive_seed(round_seed, kData));
  const Prior prior = Prior::sparse_mixture();
  VectorXd beta(cfg.p);
  for (Index j = 0; j < cfg.p; ++j) beta(j) = prior.draw(data_rng);
  const VectorXd y = X * beta + std::sqrt(cfg.sigma2) * data_rng.normal_vector(cfg.n);
  const double z = normal_quantile(0.5 + 0.5 * cfg.level);

  FcrRound round;
  round.index = r;
  auto& slots = round.methods;

  {
    MethodRound& out = slots[static_cast<std::size_t>(FcrMethod::no_selection)];
    const VectorXd fit = full_cov * (X.transpose() * y) / cfg.sigma2;
    for (Index j = 0; j < cfg.p; ++j) out.E.push_back(j);
    score(out, beta, normal_intervals(fit, full_cov, z));
  }

  slots[static_cast<std::size_t>(FcrMethod::unadjusted)] = skip_on_empty([&] {
    const LassoFit fit = lasso_fit(X, y, cfg.lambda);
    MethodRound out;
    out.E = fit.E;
    const MatrixXd X_E = select_columns(X, fit.E);
    const MatrixXd gram_inv =
        solve_spd(X_E.transpose() * X_E, MatrixXd::Identity(X_E.cols(), X_E.cols()));
    const VectorXd center = gram_inv * (X_E.transpose() * y);
    score(out, selected_target(X, fit.E, beta), normal_intervals(center, cfg.sigma2 * gram_inv, z));
    return out;
  });

  slots[static_cast<std::size_t>(FcrMethod::adjusted)] = skip_on_empty([&] {
    return posterior_round(cfg, X, y, beta, select_plain(X, y, cfg.lambda),
                           derive_seed(round_seed, kChainAdjusted));
  });

  slots[static_cast<std::size_t>(FcrMethod::randomized)] = skip_on_empty([&] {
    Rng rng(derive_seed(round_seed, kRandomization));
    return posterior_round(cfg, X, y, beta, select_randomized(X, y, cfg.lambda, cfg.gamma2, rng),
                           derive_seed(round_seed, kChainRandomized));
  });

  slots[static_cast<std::size_t>(FcrMethod::carved)] = skip_on_empty([&] {
    Rng rng(derive_seed(round_seed, kCarving));
    return posterior_round(cfg, X, y, beta,
                           select_carved(X, y, cfg.lambda, cfg.carve_fraction, rng),
                           derive_seed(round_seed, kChainCarved));
  });

  logging::debug("fcr round {} done", r);
  return round;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::string to_string(FcrMethod method) {
  switch (method) {
    case FcrMethod::no_selection: return "no_selection";
    case FcrMethod::unadjusted: return "unadjusted";
    case FcrMethod::adjusted: return "adjusted";
    case FcrMethod::randomized: return "randomized";
    case FcrMethod::carved: return "carved";
  }
  return "unknown";
}

MatrixXd standardized_design(Index n, Index p, std::uint64_t seed) {
  require(n >= 2 && p >= 1, ErrorKind::contract_violation, "design: need n >= 2 and p >= 1");
  Rng rng(seed);
  MatrixXd X(n, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < n; ++i) X(i, j) = rng.normal();
  }
  X.rowwise() -= X.colwise().mean();
  X.array().rowwise() /= X.colwise().norm().array();
  return X;
}

FcrReport run_fcr_experiment(const FcrConfig& config) {
  require(config.rounds >= 1, ErrorKind::contract_violation, "fcr: rounds must be positive");
  require(config.level > 0.0 && config.level < 1.0, ErrorKind::contract_violation,
          "fcr: level must lie in (0, 1)");
  require(config.lambda > 0.0 && config.sigma2 > 0.0 && config.gamma2 > 0.0,
          ErrorKind::contract_violation, "fcr: lambda, sigma2 and gamma2 must be positive");
  require(config.n > config.p, ErrorKind::contract_violation,
          "fcr: the no-selection baseline needs n > p");
  const MatrixXd X = standardized_design(config.n, config.p, derive_seed(config.seed, 0));
  const MatrixXd full_cov =
      config.sigma2 * solve_spd(X.transpose() * X, MatrixXd::Identity(config.p, config.p));

  FcrReport report;
  report.config = config;
  report.records.resize(static_cast<std::size_t>(config.rounds));
  parallel_for(config.rounds, config.threads, [&](long r) {
    report.records[static_cast<std::size_t>(r)] = run_round(config, X, full_cov, r);
  });

  bool any_selection = false;
  for (const FcrMethod m : kFcrMethods) {
    const auto idx = static_cast<std::size_t>(m);
    double total = 0.0;
    long used = 0;
    for (const auto& round : report.records) {
      if (round.methods[idx].skipped) continue;
      total += round.methods[idx].noncoverage;
      ++used;
    }
    report.rounds_used[idx] = used;
    report.fcr[idx] = used > 0 ? total / static_cast<double>(used) : kNaN;
    if (m != FcrMethod::no_selection && used > 0) any_selection = true;
    if (used < config.rounds) {
      logging::info("fcr: method {} skipped {} of {} rounds", to_string(m),
                    config.rounds - used, config.rounds);
    }
  }
  require(any_selection, ErrorKind::all_rounds_skipped,
          "fcr: the Lasso selected nothing in every round; FCR is undefined");
  return report;
}

// ---------------------------------------------------------------------------

namespace {

Polytope positive_halfline() { return Polytope(MatrixXd::Constant(1, 1, -1.0), VectorXd::Zero(1)); }

PosteriorSpec univariate_randomized_spec(double y, double instrument, double gamma2) {
  SelectionContext ctx;
  ctx.E = {0};
  ctx.signs = VectorXd::Ones(1);
  ctx.polytope = positive_halfline();
  ctx.lambda = 1.0;
  ctx.gamma2 = gamma2;
  ctx.randomization = VectorXd::Constant(1, instrument - y);
  ctx.instrument = VectorXd::Constant(1, instrument);
  return PosteriorSpec{GenerativeModel::saturated(1.0, MatrixXd::Ones(1, 1)), Prior::flat(),
                       std::move(ctx), VectorXd::Constant(1, y)};
}

}  // namespace

UnivariateCurves univariate_curves(const std::vector<double>& mu_grid,
                                   const std::vector<double>& y_grid, double gamma2) {
  require(gamma2 > 0.0, ErrorKind::contract_violation, "univariate_curves: gamma2 must be positive");
  for (const auto* grid : {&mu_grid, &y_grid}) {
    for (std::size_t i = 0; i < grid->size(); ++i) {
      require(std::isfinite((*grid)[i]), ErrorKind::contract_violation,
              "univariate_curves: grid values must be finite");
      require(i == 0 || (*grid)[i] > (*grid)[i - 1], ErrorKind::contract_violation,
              "univariate_curves: grids must be increasing");
    }
  }
  const Polytope P = positive_halfline();
  UnivariateCurves out;
  out.gamma2 = gamma2;
  BarrierSolver barrier(P);
  for (const double mu : mu_grid) {
    const VectorXd m = VectorXd::Constant(1, mu);
    CurveRowMu row;
    row.mu = mu;
    row.exact_log_probability = exact_univariate_log_survival(mu, 1.0, 0.0);
    row.neg_h_chernoff = -chernoff_adjustment(m, P, 1.0).h;
    row.neg_h_barrier = -barrier.solve(m, 1.0, VectorXd::Constant(1, std::max(mu, 0.0) + 1.0)).h;
    out.mu_rows.push_back(row);
  }
  for (const double y : y_grid) {
    CurveRowY row;
    row.y = y;
    row.unadjusted = y;
    if (y > 0.0) {
      row.exact_mle = exact_univariate_mle(y);
      row.approximate_mle = mle_saturated_closed_form(VectorXd::Constant(1, y), P, 1.0)(0);
    } else {
      row.exact_mle = kNaN;
      row.approximate_mle = kNaN;
    }
    // The instrument only seeds the solver; the estimate depends on y alone.
    const PosteriorSpec spec = univariate_randomized_spec(y, std::max(y, 0.0) + 1.0, gamma2);
    row.randomized_mle = randomized_mle(spec).beta_hat(0);
    out.y_rows.push_back(row);
  }
  return out;
}

ConsistencyReport consistency_experiment(const ConsistencyConfig& config) {
  require(config.beta_star < 0.0, ErrorKind::contract_violation,
          "consistency: beta_star must be negative (non-local regime)");
  require(config.replications >= 200, ErrorKind::contract_violation,
          "consistency: at least 200 replications per n");
  require(config.gamma2 > 0.0, ErrorKind::contract_violation,
          "consistency: gamma2 must be positive");
  require(!config.n_values.empty(), ErrorKind::contract_violation, "consistency: empty n grid");
  const Polytope P = positive_halfline();
  ConsistencyReport report;
  report.config = config;
  const double g2 = config.gamma2;
  for (std::size_t ni = 0; ni < config.n_values.size(); ++ni) {
    const long n = config.n_values[ni];
    require(n >= 1, ErrorKind::contract_violation, "consistency: n must be positive");
    const double root_n = std::sqrt(static_cast<double>(n));
    const double a = root_n * config.beta_star;
    const std::uint64_t n_seed = derive_seed(config.seed, ni + 1);
    const auto reps = static_cast<std::size_t>(config.replications);
    std::vector<double> err_rand(reps), err_nonrand(reps), err_mean(reps), err_mean_nonrand(reps);
    parallel_for(config.replications, config.threads, [&](long rep) {
      Rng rng(derive_seed(n_seed, static_cast<std::uint64_t>(rep)));
      const auto i = static_cast<std::size_t>(rep);
      // Nonrandomized: T = sqrt(n) mean(Y) ~ N(a, 1) given T > 0.
      const double t = sample_truncated_normal_above(a, 1.0, 0.0, rng);
      const double theta = mle_saturated_closed_form(VectorXd::Constant(1, t), P, 1.0)(0);
      err_nonrand[i] = std::abs(theta / root_n - config.beta_star);
      err_mean_nonrand[i] = std::abs(t / root_n - config.beta_star);
      // Randomized: S = T + W ~ N(a, 1 + g2) given S > 0, then T | S is Gaussian.
      const double s = sample_truncated_normal_above(a, std::sqrt(1.0 + g2), 0.0, rng);
      const double t_r = a + (s - a) / (1.0 + g2) + std::sqrt(g2 / (1.0 + g2)) * rng.normal();
      const PosteriorSpec spec = univariate_randomized_spec(t_r, s, g2);
      const double theta_r = randomized_mle(spec).beta_hat(0);
      err_rand[i] = std::abs(theta_r / root_n - config.beta_star);
      err_mean[i] = std::abs(t_r / root_n - config.beta_star);
    });
    ConsistencyRow row;
    row.n = n;
    row.randomized_mle = median(err_rand);
    row.nonrandomized_mle = median(err_nonrand);
    row.unadjusted_mean = median(err_mean);
    row.unadjusted_mean_nonrandomized = median(err_mean_nonrand);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace selbayes
