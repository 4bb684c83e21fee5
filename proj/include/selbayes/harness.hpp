#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "selbayes/experiments.hpp"

namespace selbayes {

using Json = nlohmann::json;

enum class Command { fit, estimate, simulate_fcr, demo_univariate, consistency, summarize };

std::optional<Command> parse_command(std::string_view name);
std::string to_string(Command command);

// Every key the command accepts, with its default. A null seed means "not given".
Json default_config(Command command);

// Defaults, then the config file object, then explicit overrides. Unknown keys and
// wrongly typed values raise malformed_input; a stochastic command without a seed
// raises contract_violation.
Json resolve_config(Command command, const Json& file_config, const Json& overrides);

// fit always samples; estimate only when selection is randomized or carved.
bool is_stochastic(Command command, const Json& config);

FcrConfig fcr_config_from(const Json& config);
ConsistencyConfig consistency_config_from(const Json& config);
// Grids are min + k * step for k = 0 .. round((max - min) / step).
std::vector<double> regular_grid(double min, double max, double step);

// Report documents: {"command", "config", ...}. Non-finite numbers serialize as null
// and read back as NaN.
Json fcr_report_to_json(const FcrReport& report);
FcrReport fcr_report_from_json(const Json& doc);
Json consistency_report_to_json(const ConsistencyReport& report);
ConsistencyReport consistency_report_from_json(const Json& doc);
Json curves_to_json(const UnivariateCurves& curves);
UnivariateCurves curves_from_json(const Json& doc);

// Runs one command on a resolved config and returns its report.
Json run_command(Command command, const Json& config);

Json summarize_fcr(const FcrReport& report);
Json summarize_consistency(const ConsistencyReport& report);
Json summarize_curves(const UnivariateCurves& curves);
// Dispatches on the report's "command" field, rebuilding typed reports where they exist.
Json summarize_report(const Json& doc);

// Pretty-printed with sorted keys and a trailing newline; byte-stable for equal inputs.
std::string dump_report(const Json& doc);

}  // namespace selbayes
