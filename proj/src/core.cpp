#include "selbayes/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace selbayes {

namespace {

std::string shape(const MatrixXd& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

}  // namespace

MatrixXd solve_spd(const MatrixXd& S, const MatrixXd& rhs) {
  require(S.rows() == S.cols() && S.rows() == rhs.rows(), ErrorKind::contract_violation,
          "solve_spd: dimension mismatch " + shape(S) + " vs " + shape(rhs));
  if (S.rows() == 0) return MatrixXd::Zero(0, rhs.cols());
  Eigen::LDLT<MatrixXd> ldlt(S);
  const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
  if (!(rcond * kMaxCondition > 1.0) || !ldlt.isPositive()) {
    fail(ErrorKind::degenerate_design,
         "matrix is singular or ill-conditioned (estimated condition > 1e12)");
  }
  return ldlt.solve(rhs);
}

MatrixXd solve_normal_equations(const MatrixXd& M, const MatrixXd& rhs) {
  return solve_spd(M.transpose() * M, rhs);
}

bool has_full_column_rank(const MatrixXd& M) {
  if (M.cols() == 0) return true;
  if (M.rows() < M.cols()) return false;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 1) > 1e-10 * sv(0);
}

MatrixXd select_columns(const MatrixXd& X, const std::vector<Index>& columns) {
  MatrixXd out(X.rows(), static_cast<Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    require(columns[k] >= 0 && columns[k] < X.cols(), ErrorKind::contract_violation,
            "column index out of range");
    out.col(static_cast<Index>(k)) = X.col(columns[k]);
  }
  return out;
}

MatrixXd select_rows(const MatrixXd& X, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require(rows[k] >= 0 && rows[k] < X.rows(), ErrorKind::contract_violation,
            "row index out of range");
    out.row(static_cast<Index>(k)) = X.row(rows[k]);
  }
  return out;
}

VectorXd select_entries(const VectorXd& v, const std::vector<Index>& entries) {
  VectorXd out(static_cast<Index>(entries.size()));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    require(entries[k] >= 0 && entries[k] < v.size(), ErrorKind::contract_violation,
            "entry index out of range");
    out(static_cast<Index>(k)) = v(entries[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------

Polytope::Polytope(MatrixXd A, VectorXd b) : A_(std::move(A)), b_(std::move(b)) {
  require(A_.rows() == b_.size(), ErrorKind::contract_violation,
          "polytope: A has " + std::to_string(A_.rows()) + " rows but b has length " +
              std::to_string(b_.size()));
  require(A_.allFinite() && b_.allFinite(), ErrorKind::contract_violation,
          "polytope: non-finite constraint data");
  for (Index i = 0; i < A_.rows(); ++i) {
    require(A_.row(i).squaredNorm() > 0.0, ErrorKind::contract_violation,
            "polytope: constraint row " + std::to_string(i) + " is zero");
  }
}

Polytope Polytope::whole_space(Index d) { return Polytope(MatrixXd(0, d), VectorXd(0)); }

VectorXd Polytope::slack(const VectorXd& z) const {
  require(z.size() == dimension(), ErrorKind::contract_violation,
          "polytope_slack: point has dimension " + std::to_string(z.size()) +
              ", polytope has dimension " + std::to_string(dimension()));
  return b_ - A_ * z;
}

bool Polytope::contains(const VectorXd& z) const {
  return constraints() == 0 || slack(z).minCoeff() >= 0.0;
}

bool Polytope::strictly_contains(const VectorXd& z) const {
  return constraints() == 0 || slack(z).minCoeff() > 0.0;
}

VectorXd polytope_slack(const Polytope& P, const VectorXd& z) { return P.slack(z); }

// ---------------------------------------------------------------------------

GenerativeModel::GenerativeModel(MatrixXd X_star, double sigma2, MatrixXd X_E)
    : X_star_(std::move(X_star)), sigma2_(sigma2), X_E_(std::move(X_E)) {
  require(sigma2_ > 0.0 && std::isfinite(sigma2_), ErrorKind::contract_violation,
          "generative model: sigma2 must be positive");
  require(X_star_.rows() == X_E_.rows(), ErrorKind::contract_violation,
          "generative model: X_star and X_E must have the same number of rows");
  require(X_E_.cols() > 0, ErrorKind::contract_violation,
          "generative model: X_E has no columns");
  require(has_full_column_rank(X_E_), ErrorKind::degenerate_design,
          "generative model: X_E is rank deficient");
}

GenerativeModel GenerativeModel::saturated(double sigma2, MatrixXd X_E) {
  const Index n = X_E.rows();
  return GenerativeModel(MatrixXd::Identity(n, n), sigma2, std::move(X_E));
}

GenerativeModel GenerativeModel::selected(double sigma2, MatrixXd X_E) {
  MatrixXd X_star = X_E;
  return GenerativeModel(std::move(X_star), sigma2, std::move(X_E));
}

TargetMap target_map(const std::vector<Index>& E, const MatrixXd& X, const MatrixXd& X_star) {
  require(X.rows() == X_star.rows(), ErrorKind::contract_violation,
          "target_map: X and X_star row counts differ");
  const MatrixXd X_E = select_columns(X, E);
  require(has_full_column_rank(X_E), ErrorKind::degenerate_design,
          "target_map: X_E is rank deficient");
  return {solve_normal_equations(X_E, X_E.transpose() * X_star)};
}

TargetMap target_map(const GenerativeModel& model) {
  return {solve_normal_equations(model.X_E(), model.X_E().transpose() * model.X_star())};
}

// ---------------------------------------------------------------------------

Prior Prior::gaussian(double tau2) {
  require(tau2 > 0.0 && std::isfinite(tau2), ErrorKind::contract_violation,
          "gaussian prior: variance must be positive");
  return Prior(GaussianPrior{tau2});
}

Prior Prior::mixture(std::vector<double> weights, std::vector<double> variances) {
  require(!weights.empty() && weights.size() == variances.size(), ErrorKind::contract_violation,
          "mixture prior: weights and variances must be nonempty and of equal length");
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    require(weights[k] >= 0.0, ErrorKind::contract_violation, "mixture prior: negative weight");
    require(variances[k] > 0.0, ErrorKind::contract_violation,
            "mixture prior: variances must be positive");
    total += weights[k];
  }
  require(std::abs(total - 1.0) < 1e-12, ErrorKind::contract_violation,
          "mixture prior: weights must sum to 1");
  return Prior(MixturePrior{std::move(weights), std::move(variances)});
}

std::pair<double, VectorXd> log_prior_and_grad(const Prior& prior, const VectorXd& beta) {
  require(beta.allFinite(), ErrorKind::contract_violation, "log prior: non-finite beta");
  const auto& kind = prior.kind();
  if (std::holds_alternative<FlatPrior>(kind)) return {0.0, VectorXd::Zero(beta.size())};
  if (const auto* g = std::get_if<GaussianPrior>(&kind)) {
    return {-0.5 * beta.squaredNorm() / g->tau2, -beta / g->tau2};
  }
  const auto& m = std::get<MixturePrior>(kind);
  double value = 0.0;
  VectorXd grad(beta.size());
  std::vector<double> logs(m.weights.size());
  for (Index j = 0; j < beta.size(); ++j) {
    const double x = beta(j);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m.weights.size(); ++k) {
      const double v = m.variances[k];
      logs[k] = std::log(m.weights[k]) - 0.5 * std::log(2.0 * std::numbers::pi * v) -
                0.5 * x * x / v;
      top = std::max(top, logs[k]);
    }
    double sum = 0.0;
    double weighted_score = 0.0;
    for (std::size_t k = 0; k < m.weights.size(); ++k) {
      const double r = std::exp(logs[k] - top);
      sum += r;
      weighted_score += r * (-x / m.variances[k]);
    }
    value += top + std::log(sum);
    grad(j) = weighted_score / sum;
  }
  return {value, grad};
}

}  // namespace selbayes
