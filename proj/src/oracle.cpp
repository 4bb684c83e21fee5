#include "selbayes/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace selbayes {

namespace {

constexpr double kTailSwitch = 8.0;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

double normal_pdf(double x) { return std::exp(normal_log_pdf(x)); }

double normal_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double mills_ratio(double a) {
  require(a > 0.0, ErrorKind::contract_violation, "mills_ratio: argument must be positive");
  if (a < kTailSwitch) return 0.5 * std::erfc(a / std::numbers::sqrt2) / normal_pdf(a);
  // R(a) = 1 / (a + 1 / (a + 2 / (a + 3 / (a + ...)))), evaluated from the tail.
  double t = a;
  for (int k = 60; k >= 1; --k) t = a + k / t;
  return 1.0 / t;
}

double normal_log_survival(double a) {
  if (std::isnan(a)) return a;
  if (a > kTailSwitch) return normal_log_pdf(a) + std::log(mills_ratio(a));
  if (a < 0.0) return std::log1p(-0.5 * std::erfc(-a / std::numbers::sqrt2));
  return std::log(0.5 * std::erfc(a / std::numbers::sqrt2));
}

double normal_log_cdf(double x) { return normal_log_survival(-x); }

double inverse_mills(double x) {
  if (x < -kTailSwitch) return 1.0 / mills_ratio(-x);
  return normal_pdf(x) / normal_cdf(x);
}

double normal_log_survival_inverse(double target) {
  require(target <= 0.0 && !std::isnan(target), ErrorKind::contract_violation,
          "normal_log_survival_inverse: target must be <= 0");
  if (target == 0.0) return -std::numeric_limits<double>::infinity();
  // f(z) = log S(z) - target is decreasing with f' = -phi(z)/S(z).
  double lo = -40.0;
  double hi = 40.0;
  while (normal_log_survival(hi) > target) hi *= 2.0;
  double z = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double f = normal_log_survival(z) - target;
    if (f > 0.0) lo = z;
    else hi = z;
    const double slope = -std::exp(normal_log_pdf(z) - normal_log_survival(z));
    double next = z - f / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - z) <= 1e-15 * (1.0 + std::abs(z))) return next;
    z = next;
  }
  return z;
}

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, ErrorKind::contract_violation,
          "normal_quantile: probability must lie in (0, 1)");
  // Phi(z) = p is 1 - Phi(-z) = p; solving on the log scale keeps the far tails exact.
  if (p < 0.5) return -normal_log_survival_inverse(std::log(p));
  return normal_log_survival_inverse(std::log1p(-p));
}

double exact_univariate_log_survival(double mu, double sigma, double c) {
  require(sigma > 0.0, ErrorKind::contract_violation,
          "exact_univariate_log_survival: sigma must be positive");
  return normal_log_survival((c - mu) / sigma);
}

double sample_truncated_normal_above(double mean, double sd, double lower, Rng& rng) {
  require(sd > 0.0, ErrorKind::contract_violation, "truncated normal: sd must be positive");
  const double a = (lower - mean) / sd;
  const double target = std::log(rng.uniform()) + normal_log_survival(a);
  const double z = std::max(a, normal_log_survival_inverse(target));
  return mean + sd * z;
}

double exact_univariate_mle(double y) {
  require(y > 0.0 && std::isfinite(y), ErrorKind::out_of_event,
          "exact_univariate_mle: y must lie in the selection event {y > 0}");
  auto g = [](double beta) { return beta + inverse_mills(beta); };
  double lo = -50.0;
  while (g(lo) > y) lo *= 2.0;
  double hi = y;
  for (int it = 0; it < 400 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < y) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

McEstimate mc_adjustment(const VectorXd& mu, const Polytope& P, double sigma2_eff, long N,
                         Rng& rng) {
  require(N >= 1000, ErrorKind::contract_violation, "mc_adjustment: N must be at least 1000");
  require(sigma2_eff > 0.0, ErrorKind::contract_violation,
          "mc_adjustment: sigma2_eff must be positive");
  require(mu.size() == P.dimension(), ErrorKind::contract_violation,
          "mc_adjustment: dimension mismatch");
  const double sd = std::sqrt(sigma2_eff);
  long inside = 0;
  VectorXd z(mu.size());
  for (long k = 0; k < N; ++k) {
    for (Index i = 0; i < z.size(); ++i) z(i) = mu(i) + sd * rng.normal();
    if (P.contains(z)) ++inside;
  }
  McEstimate out;
  out.n_samples = N;
  out.n_accepted = inside;
  out.value = static_cast<double>(inside) / static_cast<double>(N);
  out.std_error = inside == 0 ? 3.0 / static_cast<double>(N)
                              : std::sqrt(out.value * (1.0 - out.value) / static_cast<double>(N));
  return out;
}

McMoment mc_truncated_moment(const VectorXd& y, const Polytope& P, double gamma2, long N,
                             Rng& rng) {
  require(gamma2 > 0.0, ErrorKind::contract_violation,
          "mc_truncated_moment: gamma2 must be positive");
  require(N >= 1, ErrorKind::contract_violation, "mc_truncated_moment: N must be positive");
  require(y.size() == P.dimension(), ErrorKind::contract_violation,
          "mc_truncated_moment: dimension mismatch");
  const double gamma = std::sqrt(gamma2);
  const Index d = y.size();
  VectorXd sum = VectorXd::Zero(d);
  VectorXd sum_sq = VectorXd::Zero(d);
  VectorXd w(d);
  long proposals = 0;
  long accepted = 0;
  const long cap = 10 * N;
  while (accepted < N && proposals < cap) {
    for (Index i = 0; i < d; ++i) w(i) = gamma * rng.normal();
    ++proposals;
    if (P.contains(y + w)) {
      ++accepted;
      sum += w;
      sum_sq += w.cwiseProduct(w);
    }
  }
  if (accepted < 100) {
    throw LowAcceptanceError("mc_truncated_moment: only " + std::to_string(accepted) +
                                 " acceptances in " + std::to_string(proposals) + " proposals",
                             static_cast<double>(accepted) / static_cast<double>(proposals));
  }
  McMoment out;
  out.n_samples = proposals;
  out.n_accepted = accepted;
  const double n = static_cast<double>(accepted);
  out.mean = sum / n;
  const VectorXd variance =
      ((sum_sq / n - out.mean.cwiseProduct(out.mean)) * (n / (n - 1.0))).cwiseMax(0.0);
  out.std_error = (variance / n).cwiseSqrt();
  return out;
}

}  // namespace selbayes
