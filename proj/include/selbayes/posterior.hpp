#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "selbayes/adjustment.hpp"
#include "selbayes/core.hpp"
#include "selbayes/rng.hpp"
#include "selbayes/selection.hpp"

namespace selbayes {

// Everything the selection-adjusted posterior depends on. The regime follows from
// ctx: carved if a split is present, randomized if gamma2 > 0, plain otherwise.
// y is always the full response; under carving the split picks out its stages.
struct PosteriorSpec {
  GenerativeModel model;
  Prior prior;
  SelectionContext ctx;
  VectorXd y;
  AdjustmentMethod adjustment = AdjustmentMethod::barrier;

  Regime regime() const { return ctx.regime(); }
  // sigma2 for plain and carved, sigma2 + gamma2 for randomized.
  double adjustment_variance() const;
  void validate() const;
};

// Stateful evaluator of log pi_S(beta | data) and its gradient. Caches the reduced
// polytope and warm-starts each barrier solve from the previous optimizer.
class PosteriorEvaluator {
 public:
  explicit PosteriorEvaluator(const PosteriorSpec& spec);

  struct Terms {
    double log_likelihood = 0.0;
    double adjustment = 0.0;  // h at the adjusted mean; enters with a plus sign
    double log_prior = 0.0;
    double value = 0.0;
    VectorXd gradient;
    VectorXd z_star;
  };

  Terms evaluate(const VectorXd& beta);
  std::pair<double, VectorXd> operator()(const VectorXd& beta);

  Index parameters() const { return X_star_.cols(); }
  // Rows of X_star whose mean enters the adjustment (all rows, or stage 1).
  const MatrixXd& adjusted_design() const { return X_adj_; }
  double sigma2() const { return sigma2_; }
  double adjustment_variance() const { return sigma2_adj_; }

 private:
  MatrixXd X_star_;
  VectorXd y_;
  MatrixXd X_adj_;
  Prior prior_;
  double sigma2_;
  double sigma2_adj_;
  AdjustmentMethod method_;
  Polytope polytope_;
  VectorXd init_;
  std::unique_ptr<BarrierSolver> barrier_;
  std::unique_ptr<AdmmProjector> projector_;
};

std::pair<double, VectorXd> log_posterior_grad(const PosteriorSpec& spec, const VectorXd& beta);

// Draws are stored column-wise; the first burn_in columns are discarded by summaries.
struct PosteriorChain {
  MatrixXd draws;
  long burn_in = 0;
  double step = 0.0;
  std::uint64_t seed = 0;
  // Unadjusted Langevin has no reject step.
  bool accept_all = true;

  long size() const { return static_cast<long>(draws.cols()); }
  long kept() const { return size() - burn_in; }
};

// beta <- beta + step * grad + sqrt(2 step) * eps for n_draws iterations. burn_in < 0
// selects the default of 10 percent. A non-finite iterate raises DivergenceError.
PosteriorChain langevin_sample(const PosteriorSpec& spec, const VectorXd& init, long n_draws,
                               double step, std::uint64_t seed, long burn_in = -1);

struct SamplerOptions {
  long n_draws = 20000;
  long burn_in = -1;
  // Step relative to sigma2 / lambda_max(X_star^T X_star); <= 0 selects 0.5.
  double step_scale = 0.5;
  int max_halvings = 10;
};

double default_step(const PosteriorSpec& spec, double scale = 0.5);
// Least-squares fit of y on X_star, the default chain start.
VectorXd default_init(const PosteriorSpec& spec);

// Runs the chain from default_init with the default step, halving the step after a
// divergence or an inner solver failure.
PosteriorChain sample_posterior(const PosteriorSpec& spec, std::uint64_t seed,
                                const SamplerOptions& options = {});

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

// Type-7 empirical quantile of sorted data.
double empirical_quantile(const std::vector<double>& sorted, double q);

std::vector<Interval> credible_interval(const PosteriorChain& chain, const TargetMap& M,
                                        double level);
VectorXd posterior_mean(const PosteriorChain& chain, const TargetMap& M);

}  // namespace selbayes
