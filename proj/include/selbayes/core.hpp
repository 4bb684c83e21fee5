#pragma once

#include <cmath>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "selbayes/errors.hpp"

namespace selbayes {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

// Estimated condition numbers above this are rejected by every dense solve.
inline constexpr double kMaxCondition = 1e12;

// Solves (M^T M) x = rhs for full-column-rank M, guarding the condition of M^T M.
MatrixXd solve_normal_equations(const MatrixXd& M, const MatrixXd& rhs);
// Solves S x = rhs for symmetric positive definite S with the same guard.
MatrixXd solve_spd(const MatrixXd& S, const MatrixXd& rhs);
bool has_full_column_rank(const MatrixXd& M);
MatrixXd select_columns(const MatrixXd& X, const std::vector<Index>& columns);
MatrixXd select_rows(const MatrixXd& X, const std::vector<Index>& rows);
VectorXd select_entries(const VectorXd& v, const std::vector<Index>& entries);

// Affine constraint system {z : A z <= b}. A may have zero rows (the whole space).
class Polytope {
 public:
  Polytope(MatrixXd A, VectorXd b);
  // Unconstrained set in dimension d.
  static Polytope whole_space(Index d);

  const MatrixXd& A() const { return A_; }
  const VectorXd& b() const { return b_; }
  Index constraints() const { return A_.rows(); }
  Index dimension() const { return A_.cols(); }

  // b - A z. z is strictly interior iff every entry is positive.
  VectorXd slack(const VectorXd& z) const;
  bool contains(const VectorXd& z) const;
  bool strictly_contains(const VectorXd& z) const;

 private:
  MatrixXd A_;
  VectorXd b_;
};

VectorXd polytope_slack(const Polytope& P, const VectorXd& z);

// Y ~ N(X_star beta_star, sigma2 I); the selected design X_E defines the target.
class GenerativeModel {
 public:
  GenerativeModel(MatrixXd X_star, double sigma2, MatrixXd X_E);

  static GenerativeModel saturated(double sigma2, MatrixXd X_E);
  static GenerativeModel selected(double sigma2, MatrixXd X_E);

  const MatrixXd& X_star() const { return X_star_; }
  const MatrixXd& X_E() const { return X_E_; }
  double sigma2() const { return sigma2_; }
  Index observations() const { return X_star_.rows(); }
  Index parameters() const { return X_star_.cols(); }

 private:
  MatrixXd X_star_;
  double sigma2_;
  MatrixXd X_E_;
};

// beta^E = M beta_star with M = (X_E^T X_E)^{-1} X_E^T X_star.
struct TargetMap {
  MatrixXd M;

  VectorXd apply(const VectorXd& beta_star) const { return M * beta_star; }
  static TargetMap identity(Index k) { return {MatrixXd::Identity(k, k)}; }
};

TargetMap target_map(const std::vector<Index>& E, const MatrixXd& X, const MatrixXd& X_star);
TargetMap target_map(const GenerativeModel& model);

// Priors act independently on each coordinate of beta.
struct FlatPrior {};
struct GaussianPrior {
  double tau2;
};
struct MixturePrior {
  std::vector<double> weights;
  std::vector<double> variances;
};

class Prior {
 public:
  static Prior flat() { return Prior(FlatPrior{}); }
  static Prior gaussian(double tau2);
  static Prior mixture(std::vector<double> weights, std::vector<double> variances);
  // 0.9 N(0, 0.1) + 0.1 N(0, 3), the simulation prior of the FCR study.
  static Prior sparse_mixture() { return mixture({0.9, 0.1}, {0.1, 3.0}); }

  bool is_flat() const { return std::holds_alternative<FlatPrior>(kind_); }
  bool is_log_concave() const { return !std::holds_alternative<MixturePrior>(kind_); }
  const std::variant<FlatPrior, GaussianPrior, MixturePrior>& kind() const { return kind_; }

  // Draws one coordinate from the prior (flat has no proper draw).
  template <typename Rng>
  double draw(Rng& rng) const;

 private:
  explicit Prior(std::variant<FlatPrior, GaussianPrior, MixturePrior> kind)
      : kind_(std::move(kind)) {}

  std::variant<FlatPrior, GaussianPrior, MixturePrior> kind_;
};

// (log pi(beta) up to a constant, grad log pi(beta)). Flat returns (0, 0).
std::pair<double, VectorXd> log_prior_and_grad(const Prior& prior, const VectorXd& beta);

template <typename Rng>
double Prior::draw(Rng& rng) const {
  if (const auto* g = std::get_if<GaussianPrior>(&kind_)) return std::sqrt(g->tau2) * rng.normal();
  if (const auto* m = std::get_if<MixturePrior>(&kind_)) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t k = 0;
    for (; k + 1 < m->weights.size(); ++k) {
      acc += m->weights[k];
      if (u < acc) break;
    }
    return std::sqrt(m->variances[k]) * rng.normal();
  }
  fail(ErrorKind::unsupported_prior, "cannot draw from an improper flat prior");
}

}  // namespace selbayes
