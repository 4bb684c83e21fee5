#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "selbayes/core.hpp"

namespace selbayes {

enum class FcrMethod { no_selection, unadjusted, adjusted, randomized, carved };
inline constexpr std::array<FcrMethod, 5> kFcrMethods = {
    FcrMethod::no_selection, FcrMethod::unadjusted, FcrMethod::adjusted, FcrMethod::randomized,
    FcrMethod::carved};
std::string to_string(FcrMethod method);

struct FcrConfig {
  Index n = 100;
  Index p = 50;
  double lambda = 1.56;
  double sigma2 = 1.0;
  double gamma2 = 0.1;
  double carve_fraction = 0.2;
  long rounds = 100;
  double level = 0.95;
  std::uint64_t seed = 0;
  long n_draws = 20000;
  long burn_in = -1;
  double step_scale = 0.5;
  int threads = 1;
};

struct MethodRound {
  bool skipped = false;
  std::vector<Index> E;
  std::vector<bool> covered;
  std::vector<double> lengths;
  // Fraction of this round's intervals that miss their target.
  double noncoverage = 0.0;
};

struct FcrRound {
  long index = 0;
  std::array<MethodRound, 5> methods;
};

struct FcrReport {
  FcrConfig config;
  // Mean per-round noncoverage over rounds the method did not skip; NaN if none.
  std::array<double, 5> fcr{};
  std::array<long, 5> rounds_used{};
  std::vector<FcrRound> records;

  double coverage(FcrMethod m) const { return 1.0 - fcr[static_cast<std::size_t>(m)]; }
  double fcr_of(FcrMethod m) const { return fcr[static_cast<std::size_t>(m)]; }
};

// Seeded standard normal design with centered, unit-norm columns.
MatrixXd standardized_design(Index n, Index p, std::uint64_t seed);

// Throws all_rounds_skipped when every selection-based method skipped every round.
FcrReport run_fcr_experiment(const FcrConfig& config);

struct CurveRowMu {
  double mu = 0.0;
  double exact_log_probability = 0.0;
  double neg_h_chernoff = 0.0;
  double neg_h_barrier = 0.0;
};

// Estimator columns are NaN where the estimator is undefined (y <= 0 without randomization).
struct CurveRowY {
  double y = 0.0;
  double unadjusted = 0.0;
  double exact_mle = 0.0;
  double approximate_mle = 0.0;
  double randomized_mle = 0.0;
};

struct UnivariateCurves {
  double gamma2 = 1.0;
  std::vector<CurveRowMu> mu_rows;
  std::vector<CurveRowY> y_rows;
};

// One-dimensional problem Y ~ N(mu, 1) selected on {Y > 0}.
UnivariateCurves univariate_curves(const std::vector<double>& mu_grid,
                                   const std::vector<double>& y_grid, double gamma2 = 1.0);

struct ConsistencyConfig {
  double beta_star = -0.5;
  std::vector<long> n_values = {100, 1000, 10000};
  long replications = 500;
  double gamma2 = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct ConsistencyRow {
  long n = 0;
  // Median |estimate - beta_star| across replications.
  double randomized_mle = 0.0;
  double nonrandomized_mle = 0.0;
  // Sample mean under randomized selection, and under nonrandomized selection.
  double unadjusted_mean = 0.0;
  double unadjusted_mean_nonrandomized = 0.0;
};

struct ConsistencyReport {
  ConsistencyConfig config;
  std::vector<ConsistencyRow> rows;
};

// Samples the selected statistic sqrt(n) * mean(Y) directly from its truncated law for
// Y_i ~ N(beta_star, 1) selected on {mean > 0} (or {sqrt(n) mean + W > 0}).
ConsistencyReport consistency_experiment(const ConsistencyConfig& config);

}  // namespace selbayes
