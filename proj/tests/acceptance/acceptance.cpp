// Acceptance checks, one PASS/FAIL line per criterion. Exit status is nonzero if any
// criterion fails. Tolerances are fixed here and printed next to the observed values.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "selbayes/adjustment.hpp"
#include "selbayes/estimation.hpp"
#include "selbayes/experiments.hpp"
#include "selbayes/frequentist.hpp"
#include "selbayes/io.hpp"
#include "selbayes/oracle.hpp"
#include "selbayes/posterior.hpp"
#include "selbayes/rng.hpp"
#include "selbayes/selection.hpp"
#include "specs.hpp"

using namespace selbayes;
namespace fs = std::filesystem;

namespace {

// Criterion 1.
constexpr double kFcrBand = 0.06;
constexpr double kNoSelectionBand = 0.03;
// Criterion 3.
constexpr long kChernoffMcDraws = 100000;
constexpr double kChernoffSe = 3.0;
// Criterion 4.
constexpr double kClosedFormTol = 1e-12;
constexpr double kExactGapTol = 0.05;
// Criterion 5.
constexpr double kGradientTol = 1e-5;
// Criterion 6.
constexpr double kSupCdfTol = 0.02;
constexpr double kSamplerStepScale = 0.2;
constexpr long kSamplerBurnIn = 2000;
constexpr long kSamplerKept = 20000;
// Criterion 7.
constexpr long kUmvueMcDraws = 1000000;
constexpr double kUmvueTol = 0.1;
// Criterion 8.
constexpr double kNonrandomizedFloor = 0.1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// -----------------------------------------------------------------------------

Outcome fcr_reproduction() {
  FcrConfig config;
  config.seed = 1;
  const FcrReport r = run_fcr_experiment(config);
  struct Target {
    FcrMethod method;
    double value;
    double band;
  };
  // The reference values are coverage rates: 0.951 for intervals without selection
  // is the nominal 0.95, not an error rate.
  const Target targets[] = {{FcrMethod::no_selection, 0.951, kNoSelectionBand},
                            {FcrMethod::unadjusted, 0.75, kFcrBand},
                            {FcrMethod::adjusted, 0.85, kFcrBand},
                            {FcrMethod::randomized, 0.94, kFcrBand},
                            {FcrMethod::carved, 0.942, kFcrBand}};
  Outcome out{true, ""};
  for (const Target& t : targets) {
    const double c = r.coverage(t.method);
    const bool ok = std::abs(c - t.value) <= t.band;
    out.pass = out.pass && ok;
    out.detail += fmt("%s=%.3f(target %.3f+-%.2f) ", to_string(t.method).c_str(), c, t.value, t.band);
  }
  return out;
}

Outcome adjustment_curve_fidelity() {
  std::vector<double> mu;
  for (int k = 0; k <= 80; ++k) mu.push_back(-4.0 + 0.1 * k);
  const UnivariateCurves curves = univariate_curves(mu, {1.0});
  double mae_b = 0.0;
  double mae_c = 0.0;
  for (const CurveRowMu& row : curves.mu_rows) {
    // Reference through the test-side erfc so the comparison does not reuse the library.
    const double exact = std::log(oracle_support::std_normal_cdf(row.mu));
    mae_b += std::abs(row.neg_h_barrier - exact) / static_cast<double>(mu.size());
    mae_c += std::abs(row.neg_h_chernoff - exact) / static_cast<double>(mu.size());
  }
  return {mae_b < mae_c, fmt("MAE barrier %.4f < MAE chernoff %.4f", mae_b, mae_c)};
}

// Random polytope in dimension 1..4 with 1..5 rows around a known interior point.
Polytope random_polytope(std::mt19937& gen, VectorXd& center) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_int_distribution<int> rows(1, 5);
  const Index d = dim(gen);
  const Index m = rows(gen);
  center = VectorXd(d);
  for (Index i = 0; i < d; ++i) center(i) = normal(gen);
  MatrixXd A(m, d);
  VectorXd b(m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < d; ++j) A(i, j) = normal(gen);
    b(i) = A.row(i).dot(center) + std::abs(normal(gen)) + 0.1;
  }
  return Polytope(A, b);
}

Outcome chernoff_bound() {
  std::mt19937 gen(2024);
  std::normal_distribution<double> normal;
  int violations = 0;
  double worst = INFINITY;
  for (int k = 0; k < 100; ++k) {
    VectorXd center;
    const Polytope P = random_polytope(gen, center);
    VectorXd mu = center;
    for (Index i = 0; i < mu.size(); ++i) mu(i) += 1.5 * normal(gen);
    const auto mc = oracle_support::mc_probability(P.A(), P.b(), mu, 1.0, kChernoffMcDraws,
                                                   static_cast<unsigned>(k + 1));
    const double bound = std::exp(-chernoff_adjustment(mu, P, 1.0).h);
    const double margin = bound - (mc.p - kChernoffSe * mc.se);
    worst = std::min(worst, margin);
    if (margin < 0.0) ++violations;
  }
  return {violations == 0, fmt("%d violations in 100 polytopes, smallest margin %.4f", violations, worst)};
}

Outcome closed_form_map() {
  double worst_closed = 0.0;
  double worst_solver = 0.0;
  for (double y : {0.5, 1.0, 2.0, 5.0}) {
    const double expected = y - 1.0 / (y * (y + 1.0));
    const double closed =
        mle_saturated_closed_form(VectorXd::Constant(1, y), spec_support::positive_halfline(), 1.0)(0);
    const double solved = map_estimate(spec_support::univariate_plain(y)).beta_hat(0);
    worst_closed = std::max(worst_closed, std::abs(closed - expected));
    worst_solver = std::max(worst_solver, std::abs(solved - expected));
  }
  double worst_gap = 0.0;
  double worst_y = 0.0;
  for (double y = 3.0; y <= 10.0; y += 0.25) {
    const double gap = std::abs(y - 1.0 / (y * (y + 1.0)) - exact_univariate_mle(y));
    if (gap > worst_gap) {
      worst_gap = gap;
      worst_y = y;
    }
  }
  const bool pass = worst_closed <= kClosedFormTol && worst_solver <= kClosedFormTol &&
                    worst_gap <= kExactGapTol;
  return {pass, fmt("closed-form err %.1e, solver err %.1e (tol %.0e); max exact gap %.4f at y=%.2f "
                    "(tol %.2f)",
                    worst_closed, worst_solver, kClosedFormTol, worst_gap, worst_y, kExactGapTol)};
}

Outcome gradient_suite() {
  std::mt19937 gen(55);
  std::normal_distribution<double> normal;
  double worst_post = 0.0;
  double worst_adj = 0.0;
  for (Regime regime : {Regime::plain, Regime::randomized, Regime::carved}) {
    for (int k = 0; k < 100; ++k) {
      const Prior prior = k % 2 == 0 ? Prior::flat() : Prior::gaussian(3.0);
      const PosteriorSpec spec = spec_support::random_lasso_spec(gen, regime, k % 3 == 0, prior);
      PosteriorEvaluator eval(spec);
      VectorXd beta(eval.parameters());
      for (Index i = 0; i < beta.size(); ++i) beta(i) = normal(gen);
      const VectorXd grad = eval(beta).second;
      const VectorXd fd = oracle_support::central_gradient(
          [&](const VectorXd& b) { return log_posterior_grad(spec, b).first; }, beta);
      worst_post = std::max(worst_post, oracle_support::relative_error(grad, fd));

      const Polytope& P = spec.ctx.polytope;
      const double s2 = spec.adjustment_variance();
      VectorXd mu = spec.ctx.instrument;
      for (Index i = 0; i < mu.size(); ++i) mu(i) += normal(gen);
      const VectorXd g_adj = barrier_adjustment(mu, P, s2, spec.ctx.instrument).grad_mu;
      const VectorXd fd_adj = oracle_support::central_gradient(
          [&](const VectorXd& m) { return barrier_adjustment(m, P, s2, spec.ctx.instrument).h; }, mu);
      worst_adj = std::max(worst_adj, oracle_support::relative_error(g_adj, fd_adj));
    }
  }
  return {worst_post <= kGradientTol && worst_adj <= kGradientTol,
          fmt("max relative error: log-posterior %.2e, adjustment %.2e over 300 specs (tol %.0e)",
              worst_post, worst_adj, kGradientTol)};
}

// min_s (m - s)^2 / (2 s2) + log1p(sqrt(s2) / (b - norm_a s)) over the feasible s, by
// ternary search on the convex objective. This is h for one constraint a^T z <= b seen
// along a / ||a||, with m the mean's component in that direction.
double single_row_h(double m, double s2, double norm_a, double b) {
  const double sigma = std::sqrt(s2);
  auto f = [&](double s) { return (m - s) * (m - s) / (2.0 * s2) + std::log1p(sigma / (b - norm_a * s)); };
  double hi = b / norm_a - 1e-12;
  double lo = std::min(m, hi) - 50.0 * sigma;
  for (int it = 0; it < 200; ++it) {
    const double x1 = lo + (hi - lo) / 3.0;
    const double x2 = hi - (hi - lo) / 3.0;
    if (f(x1) < f(x2)) hi = x2;
    else lo = x1;
  }
  return f(0.5 * (lo + hi));
}

// Quadrature CDF of exp(loglik(beta) + h(beta)) for a single-parameter spec whose
// selection event has one row.
oracle_support::GridCdf posterior_oracle(const PosteriorSpec& spec) {
  const Polytope& P = spec.ctx.polytope;
  const VectorXd a = P.A().row(0).transpose();
  const double norm_a = a.norm();
  const double b = P.b()(0);
  const double s2 = spec.adjustment_variance();
  const MatrixXd& X = spec.model.X_star();
  const MatrixXd X_adj = spec.ctx.carve ? select_rows(X, spec.ctx.carve->stage1) : X;
  return oracle_support::quadrature_cdf(
      [&](double beta) {
        const double loglik = -0.5 * (spec.y - X.col(0) * beta).squaredNorm() / spec.model.sigma2();
        const double m = a.dot(X_adj.col(0) * beta) / norm_a;
        return loglik + single_row_h(m, s2, norm_a, b);
      },
      -10.0, 10.0, 4000);
}

Outcome sampler_correctness() {
  struct Case {
    const char* name;
    PosteriorSpec spec;
  };
  const Case cases[] = {{"plain", spec_support::univariate_plain(1.0)},
                        {"randomized", spec_support::univariate_randomized(1.0, 1.0)},
                        {"carved", spec_support::univariate_carved()}};
  Outcome out{true, ""};
  std::uint64_t stream = 0;
  for (const Case& c : cases) {
    if (c.spec.ctx.polytope.constraints() != 1) return {false, "oracle expects a one-row event"};
    const auto cdf = posterior_oracle(c.spec);
    const double step = default_step(c.spec, kSamplerStepScale);
    auto distance = [&](std::uint64_t seed, long thin) {
      const PosteriorChain chain = langevin_sample(c.spec, default_init(c.spec),
                                                   kSamplerBurnIn + thin * kSamplerKept, step,
                                                   seed, kSamplerBurnIn);
      std::vector<double> kept;
      for (long k = chain.burn_in; k < chain.size(); k += thin) kept.push_back(chain.draws(0, k));
      return oracle_support::sup_cdf_distance(std::move(kept), cdf);
    };
    // The decision uses 2e4 consecutive iterates. The diagnostics separate Monte Carlo
    // noise (mean over ten chains) from discretization bias (every tenth iterate).
    const double d = distance(derive_seed(1, stream++), 1);
    double mean = 0.0;
    for (int k = 0; k < 10; ++k) mean += distance(derive_seed(2, stream * 100 + k), 1) / 10.0;
    const double thinned = distance(derive_seed(3, stream), 10);
    const bool ok = d < kSupCdfTol;
    out.pass = out.pass && ok;
    out.detail += fmt("%s D=%.4f (10-chain mean %.4f, thinned %.4f) ", c.name, d, mean, thinned);
  }
  out.detail += fmt("tol %.2f, step scale %.1f, %ld kept draws", kSupCdfTol, kSamplerStepScale,
                    kSamplerKept);
  return out;
}

Outcome umvue_fidelity() {
  const Polytope P = spec_support::positive_halfline();
  const double at_half = umvue_randomized(VectorXd::Constant(1, 0.5), P, 1.0, 1.0)(0);
  Rng rng(derive_seed(7, 0));
  double worst = 0.0;
  for (double y = 0.5; y <= 3.0 + 1e-9; y += 0.25) {
    const VectorXd yv = VectorXd::Constant(1, y);
    const McMoment m = mc_truncated_moment(yv, P, 1.0, kUmvueMcDraws, rng);
    worst = std::max(worst, std::abs(umvue_randomized(yv, P, 1.0, 1.0)(0) - (y - m.mean(0))));
  }
  return {worst <= kUmvueTol && std::abs(at_half) <= 1e-12,
          fmt("max |T - RB MC| %.4f (tol %.2f) on y in [0.5, 3]; T(0.5) = %.1e", worst, kUmvueTol,
              at_half)};
}

Outcome asymptotics() {
  ConsistencyConfig config;
  config.seed = 1;
  const ConsistencyReport r = consistency_experiment(config);
  bool decreasing = true;
  std::string errors;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (i > 0) decreasing = decreasing && r.rows[i].randomized_mle < r.rows[i - 1].randomized_mle;
    errors += fmt("n=%ld rand %.4f nonrand %.4f unadj %.4f; ", r.rows[i].n, r.rows[i].randomized_mle,
                  r.rows[i].nonrandomized_mle, r.rows[i].unadjusted_mean);
  }
  const ConsistencyRow& last = r.rows.back();
  // "Non-vanishing": the unadjusted error does not shrink from the first to the last n.
  const bool unadjusted_stuck = last.unadjusted_mean > 0.5 * r.rows.front().unadjusted_mean &&
                                last.unadjusted_mean > kNonrandomizedFloor;
  const bool pass = decreasing && last.nonrandomized_mle >= kNonrandomizedFloor && unadjusted_stuck;
  return {pass, errors};
}

Outcome selection_round_trip() {
  std::mt19937 gen(909);
  std::normal_distribution<double> normal;
  int failures = 0;
  int probes = 0;
  for (int k = 0; k < 100; ++k) {
    const Index n = 10 + k % 11;
    const Index p = 3 + k % 6;
    MatrixXd X(n, p);
    VectorXd y(n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < p; ++j) X(i, j) = normal(gen);
      y(i) = 2.0 * X(i, 0) + normal(gen);
    }
    const double lambda = 1.0 + 2.0 * std::abs(normal(gen));
    const LassoFit fit = lasso_solve(X, y, lambda);
    if (fit.E.empty()) continue;
    const Polytope P = lasso_polytope(X, fit.E, fit.signs, lambda);
    if (!P.contains(y)) ++failures;  // soundness at the observed response
    for (int q = 0; q < 20; ++q) {
      VectorXd z = y;
      for (Index i = 0; i < n; ++i) z(i) += 0.7 * normal(gen);
      const VectorXd slack = P.slack(z);
      if (slack.cwiseAbs().minCoeff() < 1e-6) continue;
      const LassoFit other = lasso_solve(X, z, lambda);
      const bool same = other.E == fit.E && (other.signs - fit.signs).cwiseAbs().maxCoeff() == 0.0;
      ++probes;
      if (same != (slack.minCoeff() > 0.0)) ++failures;
    }
  }
  return {failures == 0, fmt("%d failures over 100 instances and %d probes", failures, probes)};
}

int run_cli(const std::string& args) {
  const std::string command = std::string(SELBAYES_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "selbayes_acceptance";
  fs::create_directories(dir);
  const std::string x = (dir / "X.csv").string();
  const std::string y = (dir / "y.csv").string();
  write_file(x, "a,b,c\n1,0,0.2\n0,1,0.1\n0.5,0.5,1\n1,-1,0\n0.3,0.2,-0.4\n");
  write_file(y, "y\n3\n0.5\n2\n2.5\n0.4\n");
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"fit", "fit --x " + x + " --y " + y + " --lambda 1 --seed 3 --draws 3000"},
      {"estimate", "estimate --x " + x + " --y " + y + " --lambda 1 --gamma2 0.5 --seed 3"},
      {"simulate-fcr", "simulate-fcr --n 30 --p 8 --lambda 1 --rounds 3 --draws 800 --seed 3"},
      {"demo-univariate", "demo-univariate --seed 1"},
      {"consistency", "consistency --replications 200 --seed 3"},
  };
  Outcome out{true, ""};
  for (const auto& [name, args] : commands) {
    const std::string a = (dir / (name + "_a.json")).string();
    const std::string b = (dir / (name + "_b.json")).string();
    const int ca = run_cli(args + " --out " + a);
    const int cb = run_cli(args + " --out " + b);
    const bool ok = ca == 0 && cb == 0 && read_file(a) == read_file(b);
    out.pass = out.pass && ok;
    out.detail += name + (ok ? " identical; " : fmt(" differs (exit %d/%d); ", ca, cb));
  }
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "FCR reproduction", fcr_reproduction},
      {2, "Adjustment curve fidelity", adjustment_curve_fidelity},
      {3, "Chernoff bound", chernoff_bound},
      {4, "Closed-form MAP", closed_form_map},
      {5, "Gradient suite", gradient_suite},
      {6, "Sampler correctness", sampler_correctness},
      {7, "UMVUE fidelity", umvue_fidelity},
      {8, "Asymptotics", asymptotics},
      {9, "Selection-event round trip", selection_round_trip},
      {10, "Determinism", determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
