#include "selbayes/errors.hpp"

namespace selbayes {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::contract_violation: return "contract_violation";
    case ErrorKind::degenerate_design: return "degenerate_design";
    case ErrorKind::empty_selection: return "empty_selection";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::infeasible_start: return "infeasible_start";
    case ErrorKind::infeasible_point: return "infeasible_point";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::insufficient_samples: return "insufficient_samples";
    case ErrorKind::unsupported_prior: return "unsupported_prior";
    case ErrorKind::wrong_regime: return "wrong_regime";
    case ErrorKind::range: return "range";
    case ErrorKind::invalid_split: return "invalid_split";
    case ErrorKind::collinearity: return "collinearity";
    case ErrorKind::low_acceptance: return "low_acceptance";
    case ErrorKind::out_of_event: return "out_of_event";
    case ErrorKind::malformed_input: return "malformed_input";
    case ErrorKind::all_rounds_skipped: return "all_rounds_skipped";
    case ErrorKind::internal: return "internal";
  }
  return "internal";
}

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::input: return "input";
    case ErrorCategory::selection: return "selection";
    case ErrorCategory::convergence: return "convergence";
    case ErrorCategory::internal: return "internal";
  }
  return "internal";
}

ErrorCategory category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::empty_selection:
    case ErrorKind::all_rounds_skipped:
    case ErrorKind::out_of_event:
      return ErrorCategory::selection;
    case ErrorKind::convergence:
    case ErrorKind::infeasible_start:
    case ErrorKind::divergence:
    case ErrorKind::low_acceptance:
      return ErrorCategory::convergence;
    case ErrorKind::internal:
      return ErrorCategory::internal;
    default:
      return ErrorCategory::input;
  }
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace selbayes
