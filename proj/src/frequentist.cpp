#include "selbayes/frequentist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "selbayes/adjustment.hpp"

namespace selbayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Rows of A Q with a smaller relative norm do not constrain the nuisance part.
constexpr double kNullRowTolerance = 1e-10;

}  // namespace

VectorXd umvue_randomized(const VectorXd& y, const Polytope& P, double sigma2, double gamma2,
                          const std::optional<VectorXd>& init) {
  require(gamma2 > 0.0, ErrorKind::wrong_regime, "umvue_randomized requires gamma2 > 0");
  require(sigma2 > 0.0, ErrorKind::contract_violation, "umvue_randomized: sigma2 must be positive");
  const AdjustmentResult adj = barrier_adjustment(y, P, gamma2, init.value_or(y));
  const double ratio = sigma2 / gamma2;
  return (1.0 + ratio) * y - ratio * adj.z_star;
}

std::vector<double> DensityGrid::density() const {
  std::vector<double> out(log_density.size());
  std::transform(log_density.begin(), log_density.end(), out.begin(),
                 [](double v) { return std::exp(v); });
  return out;
}

double DensityGrid::cdf(double t) const {
  require(t_values.size() >= 2, ErrorKind::contract_violation, "density grid: too few points");
  if (t <= t_values.front()) return 0.0;
  if (t >= t_values.back()) return 1.0;
  const std::vector<double> d = density();
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < t_values.size(); ++k) {
    const double h = t_values[k + 1] - t_values[k];
    if (t < t_values[k + 1]) {
      const double frac = (t - t_values[k]) / h;
      const double d_t = d[k] + (d[k + 1] - d[k]) * frac;
      return std::clamp(total + 0.5 * (t - t_values[k]) * (d[k] + d_t), 0.0, 1.0);
    }
    total += 0.5 * h * (d[k] + d[k + 1]);
  }
  return 1.0;
}

DensityGrid umpu_density_grid(const VectorXd& y, Index j, const GenerativeModel& model,
                              const Polytope& P, double beta_null, std::vector<double> grid) {
  const MatrixXd& X_E = model.X_E();
  const Index n = X_E.rows();
  const Index k = X_E.cols();
  const double sigma2 = model.sigma2();
  require(y.size() == n && P.dimension() == n, ErrorKind::contract_violation,
          "umpu_density_grid: y, X_E and the polytope must share the response dimension");
  require(j >= 0 && j < k, ErrorKind::contract_violation, "umpu_density_grid: j out of range");

  // x_res = x_j minus its projection on the other selected columns.
  std::vector<Index> others;
  for (Index c = 0; c < k; ++c) {
    if (c != j) others.push_back(c);
  }
  const VectorXd x_j = X_E.col(j);
  VectorXd x_res = x_j;
  VectorXd nuisance_fit = VectorXd::Zero(n);
  if (!others.empty()) {
    const MatrixXd X_o = select_columns(X_E, others);
    x_res -= X_o * solve_normal_equations(X_o, X_o.transpose() * x_j);
    nuisance_fit = X_o * solve_normal_equations(X_o, X_o.transpose() * y);
  }
  require(x_res.norm() >= 1e-10, ErrorKind::collinearity,
          "umpu_density_grid: selected column is collinear with the others");
  const double norm2 = x_res.squaredNorm();
  const double t_obs = x_res.dot(y) / norm2;
  const double sd = std::sqrt(sigma2 / norm2);

  if (grid.empty()) {
    const int points = 801;
    grid.resize(points);
    for (int i = 0; i < points; ++i) {
      grid[static_cast<std::size_t>(i)] = t_obs - 8.0 * sd + 16.0 * sd * i / (points - 1);
    }
  }
  require(grid.size() >= 2, ErrorKind::contract_violation, "umpu_density_grid: grid too small");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    require(grid[i] > grid[i - 1], ErrorKind::contract_violation,
            "umpu_density_grid: grid must be strictly increasing");
  }

  // Orthonormal basis of the complement of col(X_E); V = Q u with u ~ N(0, sigma2 I).
  const MatrixXd Q_full = Eigen::HouseholderQR<MatrixXd>(X_E).householderQ();
  const MatrixXd Qc = Q_full.rightCols(n - k);

  const MatrixXd& A = P.A();
  const VectorXd b_tilde = P.b() - A * nuisance_fit;
  const VectorXd a_t = A * x_res;
  const MatrixXd AQ = A * Qc;
  std::vector<Index> free_rows;
  std::vector<Index> fixed_rows;
  for (Index i = 0; i < A.rows(); ++i) {
    if (AQ.row(i).norm() > kNullRowTolerance * A.row(i).norm()) free_rows.push_back(i);
    else fixed_rows.push_back(i);
  }
  const MatrixXd AQ_free = select_rows(AQ, free_rows);
  const VectorXd b_free = select_entries(b_tilde, free_rows);
  const VectorXd a_free = select_entries(a_t, free_rows);
  const VectorXd u_obs = Qc.transpose() * y;
  const bool h_constant = a_free.size() == 0 || a_free.cwiseAbs().maxCoeff() == 0.0;

  std::optional<VectorXd> warm;
  std::optional<double> cached_h;
  auto neg_log_prob = [&](double t) -> double {
    for (Index i : fixed_rows) {
      if (b_tilde(i) - t * a_t(i) < 0.0) return std::numeric_limits<double>::infinity();
    }
    if (free_rows.empty()) return 0.0;
    if (h_constant && cached_h) return *cached_h;
    const Polytope event(AQ_free, b_free - t * a_free);
    try {
      const VectorXd start = warm && event.strictly_contains(*warm) ? *warm : u_obs;
      const AdjustmentResult adj =
          barrier_adjustment(VectorXd::Zero(Qc.cols()), event, sigma2, start);
      warm = adj.z_star;
      if (h_constant) cached_h = adj.h;
      return adj.h;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::infeasible_start) throw;
      return std::numeric_limits<double>::infinity();
    }
  };

  DensityGrid out;
  out.t_values = grid;
  out.t_observed = t_obs;
  out.conditional_sd = sd;
  out.log_density.resize(grid.size());
  double top = kNegInf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const double log_f = -0.5 * norm2 * (t - beta_null) * (t - beta_null) / sigma2 - neg_log_prob(t);
    out.log_density[i] = log_f;
    top = std::max(top, log_f);
  }
  require(std::isfinite(top), ErrorKind::out_of_event,
          "umpu_density_grid: the selection event excludes every grid point");
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    integral += 0.5 * (grid[i + 1] - grid[i]) *
                (std::exp(out.log_density[i] - top) + std::exp(out.log_density[i + 1] - top));
  }
  out.log_normalization = top + std::log(integral);
  for (double& v : out.log_density) v -= out.log_normalization;
  return out;
}

double selective_pvalue_from_grid(const DensityGrid& g, double t_obs) {
  require(!g.t_values.empty() && t_obs >= g.t_values.front() && t_obs <= g.t_values.back(),
          ErrorKind::range, "selective p-value: observed statistic lies outside the grid");
  const double F = g.cdf(t_obs);
  return std::min(1.0, 2.0 * std::min(F, 1.0 - F));
}

}  // namespace selbayes
