// Command-line front end. Every config key of a subcommand is also a flag
// (--carve-frac sets carve_frac); flags override --config, which overrides defaults.

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selbayes/errors.hpp"
#include "selbayes/harness.hpp"
#include "selbayes/io.hpp"
#include "selbayes/logging.hpp"

namespace {

using selbayes::Command;
using selbayes::Json;

constexpr const char* kFooter = R"(Exit codes:
  0  success
  2  input error (malformed CSV or config, dimension mismatch, bad flag, missing seed)
  3  selection error (empty Lasso selection, all FCR rounds skipped, y outside the event)
  4  convergence error (optimizer or sampler failure, low rejection-sampling acceptance)
  5  internal error
Failures print one line to stderr: error[<category>]: <kind>: <message>

Environment:
  SELECTIVE_BAYES_LOG=error|info|debug  diagnostic verbosity on stderr (default error)

Seeding: one 64-bit --seed; per-round and per-chain seeds are derived with
splitmix64(seed + (k + 1) * 0x9e3779b97f4a7c15) and drive mt19937_64 generators.)";

int exit_code(selbayes::ErrorCategory c) {
  switch (c) {
    case selbayes::ErrorCategory::input: return 2;
    case selbayes::ErrorCategory::selection: return 3;
    case selbayes::ErrorCategory::convergence: return 4;
    case selbayes::ErrorCategory::internal: return 5;
  }
  return 5;
}

void report_error(std::string_view category, std::string_view kind, const std::string& message) {
  std::string line = message;
  for (char& ch : line) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  std::cerr << "error[" << category << "]: " << kind << ": " << line << "\n";
}

// Storage for one flag; only flags the user passed become overrides.
struct FlagSlot {
  std::string key;
  CLI::Option* option = nullptr;
  std::string text;
  double real = 0.0;
  long integer = 0;
  std::uint64_t unsigned_value = 0;
  std::vector<long> list;
};

struct Subcommand {
  Command command;
  CLI::App* app = nullptr;
  std::vector<std::unique_ptr<FlagSlot>> flags;
  std::string config_path;
  std::string out_path;
};

std::string flag_name(const std::string& key) {
  std::string out = "--";
  for (char ch : key) out.push_back(ch == '_' ? '-' : ch);
  return out;
}

void add_flags(Subcommand& sub) {
  const Json defaults = selbayes::default_config(sub.command);
  for (const auto& [key, def] : defaults.items()) {
    auto slot = std::make_unique<FlagSlot>();
    slot->key = key;
    const std::string name = flag_name(key);
    if (def.is_null()) {
      slot->option = sub.app->add_option(name, slot->unsigned_value, "64-bit root seed");
    } else if (def.is_string()) {
      slot->option = sub.app->add_option(name, slot->text, key + " (default '" +
                                                               def.get<std::string>() + "')");
    } else if (def.is_number_integer()) {
      slot->option = sub.app->add_option(name, slot->integer, key + " (default " + def.dump() + ")");
    } else if (def.is_number()) {
      slot->option = sub.app->add_option(name, slot->real, key + " (default " + def.dump() + ")");
    } else if (def.is_array()) {
      slot->option = sub.app->add_option(name, slot->list, key + " (default " + def.dump() + ")")
                         ->delimiter(',');
    }
    sub.flags.push_back(std::move(slot));
  }
  sub.app->add_option("--config", sub.config_path, "JSON file with config keys");
  if (sub.command != Command::summarize) {
    sub.app->add_option("--out", sub.out_path, "report path (default stdout)");
  }
}

Json overrides_of(const Subcommand& sub) {
  const Json defaults = selbayes::default_config(sub.command);
  Json out = Json::object();
  for (const auto& slot : sub.flags) {
    if (slot->option->count() == 0) continue;
    const Json& def = defaults[slot->key];
    if (def.is_null()) out[slot->key] = slot->unsigned_value;
    else if (def.is_string()) out[slot->key] = slot->text;
    else if (def.is_number_integer()) out[slot->key] = slot->integer;
    else if (def.is_number()) out[slot->key] = slot->real;
    else out[slot->key] = slot->list;
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Selection-adjusted Bayesian inference after the Lasso", "selbayes"};
  app.footer(kFooter);
  app.require_subcommand(1);

  const std::vector<std::pair<Command, std::string>> commands = {
      {Command::fit, "Select with the Lasso, sample the adjusted posterior, report intervals"},
      {Command::estimate, "Select with the Lasso and report adjusted point estimates"},
      {Command::simulate_fcr, "False coverage rate study on simulated data"},
      {Command::demo_univariate, "Univariate adjustment and estimator curves"},
      {Command::consistency, "Selective MLE consistency under non-local alternatives"},
      {Command::summarize, "Recompute summary statistics from a report file"},
  };
  std::vector<std::unique_ptr<Subcommand>> subs;
  for (const auto& [command, help] : commands) {
    auto sub = std::make_unique<Subcommand>();
    sub->command = command;
    sub->app = app.add_subcommand(selbayes::to_string(command), help);
    sub->app->footer(kFooter);
    add_flags(*sub);
    subs.push_back(std::move(sub));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("input", "malformed_input", e.what());
    return 2;
  }

  selbayes::logging::configure_from_environment();
  const Subcommand* active = nullptr;
  for (const auto& sub : subs) {
    if (sub->app->parsed()) active = sub.get();
  }

  try {
    Json file_config = nullptr;
    if (!active->config_path.empty()) {
      try {
        file_config = Json::parse(selbayes::read_file(active->config_path));
      } catch (const Json::exception& e) {
        selbayes::fail(selbayes::ErrorKind::malformed_input,
                       active->config_path + ": " + e.what());
      }
    }
    const Json config = selbayes::resolve_config(active->command, file_config, overrides_of(*active));
    Json report;
    try {
      report = selbayes::run_command(active->command, config);
    } catch (const Json::exception& e) {
      selbayes::fail(selbayes::ErrorKind::malformed_input, e.what());
    }
    const std::string text = selbayes::dump_report(report);
    if (active->out_path.empty()) std::cout << text;
    else selbayes::write_file(active->out_path, text);
    return 0;
  } catch (const selbayes::Error& e) {
    report_error(selbayes::to_string(e.category()), selbayes::to_string(e.kind()), e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    report_error("internal", "internal", e.what());
    return 5;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
