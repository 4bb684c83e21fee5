#include "selbayes/adjustment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "selbayes/logging.hpp"

namespace selbayes {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Rows whose normalized inner product is below this are treated as orthogonal.
constexpr double kOrthogonalityTolerance = 1e-12;
// Starting points with a smaller slack are replaced by a searched interior point.
constexpr double kMinStartSlack = 1e-8;

Index find_root(std::vector<Index>& parent, Index i) {
  while (parent[static_cast<std::size_t>(i)] != i) {
    auto& up = parent[static_cast<std::size_t>(i)];
    up = parent[static_cast<std::size_t>(up)];
    i = up;
  }
  return i;
}

}  // namespace

ReducedPolytope::ReducedPolytope(const Polytope& P) : d_(P.dimension()), b_(P.b()) {
  const MatrixXd& A = P.A();
  const Index m = A.rows();
  row_norms_ = A.rowwise().norm();

  std::vector<Index> parent(static_cast<std::size_t>(m));
  std::iota(parent.begin(), parent.end(), Index{0});
  if (m > 1) {
    const MatrixXd gram = A * A.transpose();
    for (Index i = 0; i < m; ++i) {
      for (Index j = i + 1; j < m; ++j) {
        if (std::abs(gram(i, j)) > kOrthogonalityTolerance * row_norms_(i) * row_norms_(j)) {
          const Index ri = find_root(parent, i);
          const Index rj = find_root(parent, j);
          if (ri != rj) parent[static_cast<std::size_t>(std::max(ri, rj))] = std::min(ri, rj);
        }
      }
    }
  }

  // Blocks ordered by their smallest row index; rows within a block stay in order.
  std::vector<Index> block_of(static_cast<std::size_t>(m), -1);
  for (Index i = 0; i < m; ++i) {
    const Index root = find_root(parent, i);
    if (block_of[static_cast<std::size_t>(root)] < 0) {
      block_of[static_cast<std::size_t>(root)] = static_cast<Index>(blocks_.size());
      blocks_.emplace_back();
    }
    blocks_[static_cast<std::size_t>(block_of[static_cast<std::size_t>(root)])].rows.push_back(i);
  }

  Index total_rank = 0;
  for (auto& block : blocks_) {
    const MatrixXd A_g = select_rows(A, block.rows);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(A_g.transpose());
    const Index r = qr.rank();
    block.Q = qr.householderQ() * MatrixXd::Identity(d_, r);
    block.B = A_g * block.Q;
    block.b = select_entries(b_, block.rows);
    total_rank += r;
  }
  Q_.resize(d_, total_rank);
  Index offset = 0;
  for (const auto& block : blocks_) {
    Q_.middleCols(offset, block.Q.cols()) = block.Q;
    offset += block.Q.cols();
  }
  B_ = A * Q_;
}

VectorXd ReducedPolytope::lift(const VectorXd& u, const VectorXd& mu) const {
  return mu + Q_ * (u - Q_.transpose() * mu);
}

// ---------------------------------------------------------------------------

AdmmProjector::AdmmProjector(const Polytope& P, AdmmOptions options)
    : AdmmProjector(std::make_shared<const ReducedPolytope>(P), options) {}

AdmmProjector::AdmmProjector(std::shared_ptr<const ReducedPolytope> reduced, AdmmOptions options)
    : reduced_(std::move(reduced)), options_(options) {
  require(options_.rho > 0.0, ErrorKind::contract_violation, "admm: rho must be positive");
  require(options_.tol > 0.0, ErrorKind::contract_violation, "admm: tol must be positive");
  const MatrixXd& B = reduced_->B();
  MatrixXd K = MatrixXd::Identity(B.cols(), B.cols());
  K.selfadjointView<Eigen::Lower>().rankUpdate(B.transpose(), options_.rho);
  factor_.compute(K);
}

VectorXd AdmmProjector::project(const VectorXd& mu, const VectorXd* shift) const {
  const ReducedPolytope& R = *reduced_;
  require(mu.size() == R.dimension(), ErrorKind::contract_violation,
          "admm_project: point has dimension " + std::to_string(mu.size()) +
              ", polytope has dimension " + std::to_string(R.dimension()));
  last_iterations_ = 0;
  if (R.constraints() == 0) return mu;

  const MatrixXd& B = R.B();
  const VectorXd b = shift ? VectorXd(R.b() - *shift) : R.b();
  const double rho = options_.rho;
  const VectorXd nu = R.Q().transpose() * mu;

  VectorXd u = nu;
  VectorXd Bu = B * u;
  VectorXd r = (Bu - b).cwiseMin(0.0);
  VectorXd dual = VectorXd::Zero(b.size());
  double primal_residual = kInf;
  double dual_residual = kInf;
  for (int it = 1; it <= options_.max_iterations; ++it) {
    u = factor_.solve(nu + rho * B.transpose() * (b + r - dual));
    Bu.noalias() = B * u;
    const VectorXd r_prev = r;
    r = (Bu - b + dual).cwiseMin(0.0);
    const VectorXd gap = Bu - b - r;
    dual += gap;
    primal_residual = gap.norm();
    dual_residual = rho * (B.transpose() * (r - r_prev)).norm();
    if (primal_residual < options_.tol && dual_residual < options_.tol) {
      last_iterations_ = it;
      return R.lift(u, mu);
    }
  }
  last_iterations_ = options_.max_iterations;
  throw ConvergenceError("admm_project: no convergence within " +
                             std::to_string(options_.max_iterations) + " iterations",
                         primal_residual, dual_residual);
}

VectorXd admm_project(const VectorXd& mu, const Polytope& P, double rho, double tol,
                      int max_iterations) {
  return AdmmProjector(P, AdmmOptions{rho, tol, max_iterations}).project(mu);
}

AdjustmentResult chernoff_adjustment(const VectorXd& mu, const Polytope& P, double sigma2_eff) {
  require(sigma2_eff > 0.0 && std::isfinite(sigma2_eff), ErrorKind::contract_violation,
          "chernoff_adjustment: sigma2_eff must be positive");
  require(mu.allFinite(), ErrorKind::contract_violation, "chernoff_adjustment: non-finite mean");
  AdjustmentResult out;
  out.method = AdjustmentMethod::chernoff;
  if (P.contains(mu)) {
    out.z_star = mu;
    out.grad_mu = VectorXd::Zero(mu.size());
    return out;
  }
  AdmmProjector projector(P);
  out.z_star = projector.project(mu);
  out.iterations = projector.last_iterations();
  out.h = (mu - out.z_star).squaredNorm() / (2.0 * sigma2_eff);
  out.grad_mu = (mu - out.z_star) / sigma2_eff;
  return out;
}

double barrier_value(const VectorXd& z, const Polytope& P, double sigma_eff) {
  const VectorXd s = P.slack(z);
  double total = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    if (!(s(i) > 0.0)) return kInf;
    total += std::log1p(sigma_eff / s(i));
  }
  return total;
}

// ---------------------------------------------------------------------------

namespace {

struct BlockSolve {
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
};

double block_objective(const ReducedPolytope::Block& blk, const VectorXd& nu, double sigma,
                       const VectorXd& u) {
  const VectorXd s = blk.b - blk.B * u;
  double total = 0.5 * (u - nu).squaredNorm() / (sigma * sigma);
  for (Index i = 0; i < s.size(); ++i) {
    if (!(s(i) > 0.0)) return kInf;
    total += std::log1p(sigma / s(i));
  }
  return total;
}

// Damped Newton on one block. u must be strictly interior on entry and stays so.
BlockSolve newton_block(const ReducedPolytope::Block& blk, const VectorXd& nu, double sigma,
                        VectorXd& u, int max_iterations) {
  const double s2 = sigma * sigma;
  const Index r = u.size();
  BlockSolve out;
  VectorXd g(r);
  double prev_decrement = kInf;

  // Returns the magnitude of the two gradient terms, the scale of its rounding error.
  auto gradient_at = [&](const VectorXd& point, VectorXd& s) {
    s = blk.b - blk.B * point;
    const VectorXd weights = sigma / (s.array() * (s.array() + sigma));
    const VectorXd pull = (point - nu) / s2;
    const VectorXd push = blk.B.transpose() * weights;
    g = pull + push;
    return pull.norm() + push.norm();
  };

  VectorXd s;
  for (int it = 0; it < max_iterations; ++it) {
    const double scale = gradient_at(u, s);
    if (g.norm() <= 1e-14 * (scale + 1.0 / sigma)) break;

    const Eigen::ArrayXd denom = s.array() * (s.array() + sigma);
    const VectorXd curvature = (sigma * (2.0 * s.array() + sigma) / denom.square()).sqrt();
    MatrixXd H = MatrixXd::Identity(r, r) / s2;
    H.selfadjointView<Eigen::Lower>().rankUpdate((curvature.asDiagonal() * blk.B).transpose());
    Eigen::LLT<MatrixXd> llt(H.selfadjointView<Eigen::Lower>());
    VectorXd d = llt.info() == Eigen::Success ? VectorXd(-llt.solve(g)) : VectorXd(-s2 * g);
    const double slope = g.dot(d);
    if (!(slope < 0.0)) {
      d = -s2 * g;
    }
    const double decrement = -g.dot(d);

    const VectorXd Bd = blk.B * d;
    double t_max = kInf;
    for (Index i = 0; i < Bd.size(); ++i) {
      if (Bd(i) > 0.0) t_max = std::min(t_max, s(i) / Bd(i));
    }
    ++out.iterations;

    // Inside the quadratic convergence region take full steps: function values no
    // longer resolve the decrease, so an Armijo test would stall on rounding.
    const double f0 = block_objective(blk, nu, sigma, u);
    if (decrement < 1e-12 * (1.0 + std::abs(f0)) && t_max > 1.0) {
      u += d;
      if (decrement < 1e-26 || decrement >= prev_decrement) break;
      prev_decrement = decrement;
      continue;
    }
    prev_decrement = decrement;

    double t = t_max > 1.0 ? 1.0 : 0.99 * t_max;
    bool accepted = false;
    while (t > 1e-20) {
      const VectorXd candidate = u + t * d;
      const double f = block_objective(blk, nu, sigma, candidate);
      if (f <= f0 + 1e-4 * t * g.dot(d)) {
        u = candidate;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Rounding in f hides the decrease; accept the longest step that shrinks g.
      const double g_norm = g.norm();
      const VectorXd g_keep = g;
      VectorXd s_trial;
      for (t = t_max > 1.0 ? 1.0 : 0.99 * t_max; t > 1e-20 && !accepted; t *= 0.5) {
        const VectorXd candidate = u + t * d;
        gradient_at(candidate, s_trial);
        if (s_trial.minCoeff() > 0.0 && g.norm() < g_norm) {
          u = candidate;
          accepted = true;
        }
      }
      if (!accepted) g = g_keep;
    }
    if (!accepted) break;
  }
  gradient_at(u, s);
  out.gradient_norm = g.norm();
  out.value = block_objective(blk, nu, sigma, u);
  return out;
}

}  // namespace

BarrierSolver::BarrierSolver(const Polytope& P, NewtonOptions options)
    : BarrierSolver(std::make_shared<const ReducedPolytope>(P), options) {}

BarrierSolver::BarrierSolver(std::shared_ptr<const ReducedPolytope> reduced,
                             NewtonOptions options)
    : reduced_(std::move(reduced)), options_(options) {}

BarrierSolver::BlockPoints BarrierSolver::split(const VectorXd& z) const {
  BlockPoints out;
  out.reserve(reduced_->blocks().size());
  for (const auto& blk : reduced_->blocks()) out.push_back(blk.Q.transpose() * z);
  return out;
}

bool BarrierSolver::strictly_interior(const BlockPoints& u) const {
  const auto& blocks = reduced_->blocks();
  for (std::size_t g = 0; g < blocks.size(); ++g) {
    const VectorXd s = blocks[g].b - blocks[g].B * u[g];
    if (!s.allFinite() || !(s.minCoeff() > kMinStartSlack)) return false;
  }
  return true;
}

VectorXd BarrierSolver::find_interior(const VectorXd& hint, double sigma) const {
  AdmmProjector projector(reduced_);
  for (const double eps : {1.0, 0.1, 0.01, 1e-3, 1e-4}) {
    const VectorXd shift = eps * sigma * reduced_->row_norms();
    try {
      VectorXd z = projector.project(hint, &shift);
      if (strictly_interior(split(z))) {
        logging::debug("barrier: interior start found with shrink factor {}", eps);
        return z;
      }
    } catch (const ConvergenceError&) {
      continue;
    }
  }
  fail(ErrorKind::infeasible_start,
       "barrier_adjustment: no strictly interior starting point could be found");
}

void BarrierSolver::set_warm_start(const VectorXd& z) {
  require(z.size() == reduced_->dimension(), ErrorKind::contract_violation,
          "barrier: warm start has wrong dimension");
  warm_ = split(z);
}

AdjustmentResult BarrierSolver::solve(const VectorXd& mu, double sigma2_eff,
                                      const VectorXd& init) {
  require(sigma2_eff > 0.0 && std::isfinite(sigma2_eff), ErrorKind::contract_violation,
          "barrier_adjustment: sigma2_eff must be positive");
  require(mu.size() == reduced_->dimension() && init.size() == reduced_->dimension(),
          ErrorKind::contract_violation, "barrier_adjustment: dimension mismatch");
  require(mu.allFinite(), ErrorKind::contract_violation, "barrier_adjustment: non-finite mean");
  BlockPoints u = split(init);
  if (!init.allFinite() || !strictly_interior(u)) {
    u = split(find_interior(init.allFinite() ? init : mu, std::sqrt(sigma2_eff)));
  }
  return solve_blocks(mu, sigma2_eff, std::move(u));
}

AdjustmentResult BarrierSolver::solve_warm(const VectorXd& mu, double sigma2_eff) {
  require(warm_.has_value(), ErrorKind::contract_violation, "barrier: no warm start available");
  require(sigma2_eff > 0.0 && std::isfinite(sigma2_eff), ErrorKind::contract_violation,
          "barrier_adjustment: sigma2_eff must be positive");
  require(mu.size() == reduced_->dimension(), ErrorKind::contract_violation,
          "barrier_adjustment: dimension mismatch");
  require(mu.allFinite(), ErrorKind::contract_violation, "barrier_adjustment: non-finite mean");
  return solve_blocks(mu, sigma2_eff, *warm_);
}

AdjustmentResult BarrierSolver::solve_blocks(const VectorXd& mu, double sigma2_eff,
                                             BlockPoints u) {
  const double sigma = std::sqrt(sigma2_eff);
  const auto& blocks = reduced_->blocks();
  AdjustmentResult out;
  out.method = AdjustmentMethod::barrier;
  double gradient_sq = 0.0;
  VectorXd u_all(reduced_->rank());
  Index offset = 0;
  for (std::size_t g = 0; g < blocks.size(); ++g) {
    const VectorXd nu = blocks[g].Q.transpose() * mu;
    const BlockSolve solved = newton_block(blocks[g], nu, sigma, u[g], options_.max_iterations);
    out.h += solved.value;
    out.iterations += solved.iterations;
    gradient_sq += solved.gradient_norm * solved.gradient_norm;
    u_all.segment(offset, u[g].size()) = u[g];
    offset += u[g].size();
  }
  out.converged = std::sqrt(gradient_sq) * sigma < options_.gradient_tolerance;
  if (!out.converged) {
    throw ConvergenceError("barrier_adjustment: Newton stopped with gradient norm " +
                               std::to_string(std::sqrt(gradient_sq)),
                           std::sqrt(gradient_sq));
  }
  out.z_star = reduced_->lift(u_all, mu);
  out.grad_mu = reduced_->Q() * (reduced_->Q().transpose() * mu - u_all) / sigma2_eff;
  warm_ = std::move(u);
  return out;
}

AdjustmentResult barrier_adjustment(const VectorXd& mu, const Polytope& P, double sigma2_eff,
                                    const VectorXd& init) {
  BarrierSolver solver(P);
  return solver.solve(mu, sigma2_eff, init);
}

}  // namespace selbayes
