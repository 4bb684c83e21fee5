#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "selbayes/core.hpp"

namespace selbayes {

enum class AdjustmentMethod { chernoff, barrier };

// h approximates -log P(Z in P) for Z ~ N(mu, sigma2_eff I).
// grad_mu = (mu - z_star) / sigma2_eff for both methods.
struct AdjustmentResult {
  double h = 0.0;
  VectorXd z_star;
  VectorXd grad_mu;
  AdjustmentMethod method = AdjustmentMethod::barrier;
  int iterations = 0;
  bool converged = true;
};

struct AdmmOptions {
  double rho = 1.0;
  double tol = 1e-10;
  int max_iterations = 10000;
};

struct NewtonOptions {
  // Stationarity required for converged = true.
  double gradient_tolerance = 1e-8;
  int max_iterations = 200;
};

// Constraints depend on z only through its component in range(A^T). Rows are grouped
// into blocks whose row spaces are mutually orthogonal; block g gets an orthonormal
// basis Q_g of its row space and B_g = A_g Q_g. Problems with a separable quadratic
// then split into independent small problems in u_g = Q_g^T z, and the orthogonal
// complement of all blocks is left untouched.
class ReducedPolytope {
 public:
  struct Block {
    std::vector<Index> rows;
    MatrixXd Q;
    MatrixXd B;
    VectorXd b;
  };

  explicit ReducedPolytope(const Polytope& P);

  Index dimension() const { return d_; }
  Index rank() const { return Q_.cols(); }
  Index constraints() const { return B_.rows(); }
  const std::vector<Block>& blocks() const { return blocks_; }
  // Concatenated basis and the full constraint matrix in those coordinates.
  const MatrixXd& Q() const { return Q_; }
  const MatrixXd& B() const { return B_; }
  const VectorXd& b() const { return b_; }
  // Full-space norms of the constraint rows.
  const VectorXd& row_norms() const { return row_norms_; }

  // z = Q u + (I - Q Q^T) mu.
  VectorXd lift(const VectorXd& u, const VectorXd& mu) const;

 private:
  Index d_;
  std::vector<Block> blocks_;
  MatrixXd Q_;
  MatrixXd B_;
  VectorXd b_;
  VectorXd row_norms_;
};

// Euclidean projection onto P by ADMM, with (I + rho B^T B) factored once.
class AdmmProjector {
 public:
  AdmmProjector(const Polytope& P, AdmmOptions options = {});
  explicit AdmmProjector(std::shared_ptr<const ReducedPolytope> reduced, AdmmOptions options = {});

  // Projection onto {A z <= b - shift}; shift defaults to zero.
  VectorXd project(const VectorXd& mu, const VectorXd* shift = nullptr) const;
  int last_iterations() const { return last_iterations_; }

 private:
  std::shared_ptr<const ReducedPolytope> reduced_;
  AdmmOptions options_;
  Eigen::LLT<MatrixXd> factor_;
  mutable int last_iterations_ = 0;
};

VectorXd admm_project(const VectorXd& mu, const Polytope& P, double rho = 1.0, double tol = 1e-10,
                      int max_iterations = 10000);

AdjustmentResult chernoff_adjustment(const VectorXd& mu, const Polytope& P, double sigma2_eff);

// sum_i log(1 + sigma_eff / (b_i - a_i^T z)), or +infinity off the interior.
double barrier_value(const VectorXd& z, const Polytope& P, double sigma_eff);

// Solves min_z ||mu - z||^2 / (2 s2) + sum_i log1p(sqrt(s2) / slack_i(z)) by damped
// Newton in the reduced coordinates. Reusable across many mu for one polytope; keeps
// the last optimizer as a warm start.
class BarrierSolver {
 public:
  explicit BarrierSolver(const Polytope& P, NewtonOptions options = {});
  explicit BarrierSolver(std::shared_ptr<const ReducedPolytope> reduced,
                         NewtonOptions options = {});

  // init must be strictly interior; otherwise an interior point is searched for near
  // it (or near mu) and infeasible_start is thrown if none is found.
  AdjustmentResult solve(const VectorXd& mu, double sigma2_eff, const VectorXd& init);
  // Uses the previous optimizer as the starting point.
  AdjustmentResult solve_warm(const VectorXd& mu, double sigma2_eff);
  bool has_warm_start() const { return warm_.has_value(); }
  void set_warm_start(const VectorXd& z);

  const ReducedPolytope& reduced() const { return *reduced_; }

 private:
  using BlockPoints = std::vector<VectorXd>;

  BlockPoints split(const VectorXd& z) const;
  bool strictly_interior(const BlockPoints& u) const;
  AdjustmentResult solve_blocks(const VectorXd& mu, double sigma2_eff, BlockPoints u);
  // Projects hint onto polytopes shrunk by eps * sigma * ||a_i|| for decreasing eps
  // and returns the first strictly interior result.
  VectorXd find_interior(const VectorXd& hint, double sigma) const;

  std::shared_ptr<const ReducedPolytope> reduced_;
  NewtonOptions options_;
  std::optional<BlockPoints> warm_;
};

AdjustmentResult barrier_adjustment(const VectorXd& mu, const Polytope& P, double sigma2_eff,
                                    const VectorXd& init);

}  // namespace selbayes
