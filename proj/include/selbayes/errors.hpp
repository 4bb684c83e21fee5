#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace selbayes {

// Coarse failure classes. The CLI maps each to its own exit code.
enum class ErrorCategory { input, selection, convergence, internal };

enum class ErrorKind {
  contract_violation,
  degenerate_design,
  empty_selection,
  convergence,
  infeasible_start,
  infeasible_point,
  divergence,
  insufficient_samples,
  unsupported_prior,
  wrong_regime,
  range,
  invalid_split,
  collinearity,
  low_acceptance,
  out_of_event,
  malformed_input,
  all_rounds_skipped,
  internal,
};

std::string_view to_string(ErrorKind kind);
std::string_view to_string(ErrorCategory category);
ErrorCategory category_of(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_of(kind_); }

 private:
  ErrorKind kind_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double primal_residual,
                   double dual_residual = 0.0)
      : Error(ErrorKind::convergence, what),
        primal_residual_(primal_residual),
        dual_residual_(dual_residual) {}

  double primal_residual() const noexcept { return primal_residual_; }
  double dual_residual() const noexcept { return dual_residual_; }

 private:
  double primal_residual_;
  double dual_residual_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : Error(ErrorKind::divergence, what), iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

class LowAcceptanceError : public Error {
 public:
  LowAcceptanceError(const std::string& what, double rate)
      : Error(ErrorKind::low_acceptance, what), rate_(rate) {}

  double rate() const noexcept { return rate_; }

 private:
  double rate_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace selbayes
