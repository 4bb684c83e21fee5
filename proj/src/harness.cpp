#include "selbayes/harness.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "selbayes/errors.hpp"
#include "selbayes/estimation.hpp"
#include "selbayes/io.hpp"
#include "selbayes/posterior.hpp"
#include "selbayes/rng.hpp"
#include "selbayes/selection.hpp"

namespace selbayes {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Streams under the fit seed.
constexpr std::uint64_t kFitSelection = 0;
constexpr std::uint64_t kFitChain = 1;

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double as_number(const Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

Json vector_json(const VectorXd& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Json index_json(const std::vector<Index>& v) {
  Json out = Json::array();
  for (Index i : v) out.push_back(i);
  return out;
}

std::vector<Index> index_vector(const Json& j) {
  std::vector<Index> out;
  for (const auto& v : j) out.push_back(v.get<Index>());
  return out;
}

bool matches_type(const std::string& key, const Json& def, const Json& value) {
  if (key == "seed") {
    return value.is_null() || value.is_number_unsigned() ||
           (value.is_number_integer() && value.get<std::int64_t>() >= 0);
  }
  if (def.is_boolean()) return value.is_boolean();
  if (def.is_string()) return value.is_string();
  if (def.is_number_integer()) return value.is_number_integer();
  if (def.is_number()) return value.is_number();
  if (def.is_array()) {
    if (!value.is_array()) return false;
    for (const auto& v : value) {
      if (!v.is_number_integer()) return false;
    }
    return true;
  }
  return false;
}

void merge_into(Json& config, const Json& layer, Command command, const std::string& origin) {
  if (layer.is_null()) return;
  require(layer.is_object(), ErrorKind::malformed_input, origin + ": config must be a JSON object");
  for (const auto& [key, value] : layer.items()) {
    require(config.contains(key), ErrorKind::malformed_input,
            origin + ": unknown key '" + key + "' for command " + to_string(command));
    require(matches_type(key, config[key], value), ErrorKind::malformed_input,
            origin + ": key '" + key + "' has the wrong type (" + value.type_name() + ")");
    // Seeds are stored unsigned so equal configs serialize identically.
    config[key] = key == "seed" && !value.is_null()
                      ? Json(value.get<std::uint64_t>())
                      : value;
  }
}

Prior parse_prior(const std::string& spec) {
  if (spec == "flat") return Prior::flat();
  if (spec == "mixture") return Prior::sparse_mixture();
  const std::string prefix = "gaussian:";
  if (spec.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    double tau2 = 0.0;
    try {
      tau2 = std::stod(spec.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used > 0 && used == spec.size() - prefix.size() && tau2 > 0.0 && std::isfinite(tau2),
            ErrorKind::malformed_input, "prior: gaussian variance must be a positive number");
    return Prior::gaussian(tau2);
  }
  fail(ErrorKind::malformed_input, "prior: expected flat, gaussian:<tau2> or mixture, got '" +
                                       spec + "'");
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::plain: return "plain";
    case Regime::randomized: return "randomized";
    case Regime::carved: return "carved";
  }
  return "unknown";
}

std::string method_name(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::map: return "map";
    case EstimateMethod::mle: return "mle";
    case EstimateMethod::randomized_mle: return "randomized_mle";
    case EstimateMethod::mle_saturated_closed_form: return "mle_saturated_closed_form";
  }
  return "unknown";
}

struct LoadedInput {
  std::string path;
  std::string hash;
  MatrixXd values;
};

LoadedInput load_input(const Json& config, const std::string& key) {
  const std::string path = config[key].get<std::string>();
  require(!path.empty(), ErrorKind::malformed_input, "missing --" + key + " path");
  const std::string text = read_file(path);
  return {path, git_blob_hash(text), parse_csv(text, path).values};
}

Json estimate_json(const EstimateResult& r, const TargetMap& M) {
  return Json{{"method", method_name(r.method)},
              {"beta_target", vector_json(M.apply(r.beta_hat))},
              {"objective", number(r.objective_value)},
              {"kkt_residual", number(r.kkt_residual)},
              {"iterations", r.iterations},
              {"converged", r.converged}};
}

// fit and estimate share selection and the point estimate; fit adds the posterior.
Json run_fit(const Json& config, bool with_posterior) {
  const LoadedInput x_in = load_input(config, "x");
  const LoadedInput y_in = load_input(config, "y");
  const MatrixXd& X = x_in.values;
  VectorXd y;
  if (y_in.values.cols() == 1) y = y_in.values.col(0);
  else if (y_in.values.rows() == 1) y = y_in.values.row(0).transpose();
  else fail(ErrorKind::malformed_input, y_in.path + ": response must be a single column");
  require(X.rows() == y.size(), ErrorKind::malformed_input,
          "dimension mismatch: X has " + std::to_string(X.rows()) + " rows but y has " +
              std::to_string(y.size()) + " entries");

  const double lambda = config["lambda"].get<double>();
  const double gamma2 = config["gamma2"].get<double>();
  const double carve = config["carve_frac"].get<double>();
  const double sigma2 = config["sigma2"].get<double>();
  require(lambda > 0.0, ErrorKind::malformed_input, "lambda must be positive");
  require(sigma2 > 0.0, ErrorKind::malformed_input, "sigma2 must be positive");
  require(gamma2 >= 0.0 && carve >= 0.0 && carve < 1.0, ErrorKind::malformed_input,
          "gamma2 must be nonnegative and carve-frac must lie in [0, 1)");
  require(!(gamma2 > 0.0 && carve > 0.0), ErrorKind::malformed_input,
          "randomization and carving cannot be combined; set one of gamma2, carve-frac to 0");
  const Prior prior = parse_prior(config["prior"].get<std::string>());
  const std::string model_name = config["model"].get<std::string>();
  require(model_name == "selected" || model_name == "saturated", ErrorKind::malformed_input,
          "model must be selected or saturated");
  const std::string adjustment_name = config["adjustment"].get<std::string>();
  require(adjustment_name == "barrier" || adjustment_name == "chernoff",
          ErrorKind::malformed_input, "adjustment must be barrier or chernoff");

  const std::uint64_t seed = config["seed"].is_null() ? 0 : config["seed"].get<std::uint64_t>();
  Rng selection_rng(derive_seed(seed, kFitSelection));
  SelectionContext ctx = gamma2 > 0.0   ? select_randomized(X, y, lambda, gamma2, selection_rng)
                         : carve > 0.0 ? select_carved(X, y, lambda, carve, selection_rng)
                                       : select_plain(X, y, lambda);
  const MatrixXd X_E = select_columns(X, ctx.E);
  const GenerativeModel model = model_name == "selected"
                                    ? GenerativeModel::selected(sigma2, X_E)
                                    : GenerativeModel::saturated(sigma2, X_E);
  const TargetMap M = target_map(model);

  Json report;
  report["command"] = with_posterior ? "fit" : "estimate";
  report["config"] = config;
  report["inputs"] = {{"x", {{"path", x_in.path}, {"git_blob_sha1", x_in.hash}}},
                      {"y", {{"path", y_in.path}, {"git_blob_sha1", y_in.hash}}}};
  report["selection"] = {{"E", index_json(ctx.E)},
                         {"signs", vector_json(ctx.signs)},
                         {"regime", regime_name(ctx.regime())},
                         {"constraints", ctx.polytope.constraints()},
                         {"boundary_warning", ctx.boundary_warning}};
  if (ctx.carve) report["selection"]["stage1_rows"] = index_json(ctx.carve->stage1);

  PosteriorSpec spec{model, prior, std::move(ctx), y};
  spec.adjustment =
      adjustment_name == "barrier" ? AdjustmentMethod::barrier : AdjustmentMethod::chernoff;

  Json estimates = Json::object();
  if (prior.is_log_concave()) {
    const EstimateResult r =
        spec.regime() == Regime::randomized ? randomized_mle(spec)
        : prior.is_flat()                   ? general_mle(spec)
                                            : map_estimate(spec);
    estimates["point"] = estimate_json(r, M);
  } else if (!with_posterior) {
    fail(ErrorKind::unsupported_prior,
         "estimate needs a log-concave prior; use fit for posterior summaries under the mixture");
  }
  report["estimates"] = estimates;

  if (with_posterior) {
    SamplerOptions options;
    options.n_draws = config["draws"].get<long>();
    options.burn_in = config["burn_in"].get<long>();
    options.step_scale = config["step_scale"].get<double>();
    const double level = config["level"].get<double>();
    require(level > 0.0 && level < 1.0, ErrorKind::malformed_input, "level must lie in (0, 1)");
    const PosteriorChain chain = sample_posterior(spec, derive_seed(seed, kFitChain), options);
    const auto intervals = credible_interval(chain, M, level);
    const VectorXd mean = posterior_mean(chain, M);
    Json rows = Json::array();
    for (std::size_t j = 0; j < intervals.size(); ++j) {
      rows.push_back({{"variable", spec.ctx.E[j]},
                      {"mean", number(mean(static_cast<Index>(j)))},
                      {"lower", number(intervals[j].lower)},
                      {"upper", number(intervals[j].upper)}});
    }
    report["posterior"] = {{"draws", chain.size()},
                           {"burn_in", chain.burn_in},
                           {"step", number(chain.step)},
                           {"level", level},
                           {"intervals", rows}};
  }
  return report;
}

Json config_json(const FcrConfig& c) {
  return Json{{"n", c.n},           {"p", c.p},
              {"lambda", c.lambda}, {"sigma2", c.sigma2},
              {"gamma2", c.gamma2}, {"carve_frac", c.carve_fraction},
              {"rounds", c.rounds}, {"level", c.level},
              {"seed", c.seed},     {"draws", c.n_draws},
              {"burn_in", c.burn_in}, {"step_scale", c.step_scale},
              {"threads", c.threads}};
}

Json config_json(const ConsistencyConfig& c) {
  return Json{{"beta_star", c.beta_star}, {"n_values", c.n_values},
              {"replications", c.replications}, {"gamma2", c.gamma2},
              {"seed", c.seed}, {"threads", c.threads}};
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double total = 0.0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

}  // namespace

std::optional<Command> parse_command(std::string_view name) {
  if (name == "fit") return Command::fit;
  if (name == "estimate") return Command::estimate;
  if (name == "simulate-fcr") return Command::simulate_fcr;
  if (name == "demo-univariate") return Command::demo_univariate;
  if (name == "consistency") return Command::consistency;
  if (name == "summarize") return Command::summarize;
  return std::nullopt;
}

std::string to_string(Command command) {
  switch (command) {
    case Command::fit: return "fit";
    case Command::estimate: return "estimate";
    case Command::simulate_fcr: return "simulate-fcr";
    case Command::demo_univariate: return "demo-univariate";
    case Command::consistency: return "consistency";
    case Command::summarize: return "summarize";
  }
  return "unknown";
}

Json default_config(Command command) {
  switch (command) {
    case Command::fit:
    case Command::estimate: {
      Json c = {{"x", ""},           {"y", ""},         {"lambda", 1.0},
                {"gamma2", 0.0},     {"carve_frac", 0.0}, {"prior", "flat"},
                {"sigma2", 1.0},     {"model", "selected"}, {"adjustment", "barrier"},
                {"seed", nullptr}};
      if (command == Command::fit) {
        const SamplerOptions s;
        c["level"] = 0.95;
        c["draws"] = s.n_draws;
        c["burn_in"] = s.burn_in;
        c["step_scale"] = s.step_scale;
      }
      return c;
    }
    case Command::simulate_fcr: {
      Json c = config_json(FcrConfig{});
      c["seed"] = nullptr;
      return c;
    }
    case Command::demo_univariate:
      return Json{{"mu_min", -4.0}, {"mu_max", 4.0}, {"mu_step", 0.1}, {"y_min", -2.0},
                  {"y_max", 5.0},   {"y_step", 0.1}, {"gamma2", 1.0},  {"seed", nullptr}};
    case Command::consistency: {
      Json c = config_json(ConsistencyConfig{});
      c["seed"] = nullptr;
      return c;
    }
    case Command::summarize:
      return Json{{"input", ""}};
  }
  return Json::object();
}

bool is_stochastic(Command command, const Json& config) {
  switch (command) {
    case Command::fit:
    case Command::simulate_fcr:
    case Command::consistency:
      return true;
    case Command::estimate:
      return config["gamma2"].get<double>() > 0.0 || config["carve_frac"].get<double>() > 0.0;
    default:
      return false;
  }
}

Json resolve_config(Command command, const Json& file_config, const Json& overrides) {
  Json config = default_config(command);
  merge_into(config, file_config, command, "config file");
  merge_into(config, overrides, command, "command line");
  if (config.contains("seed")) {
    require(!is_stochastic(command, config) || !config["seed"].is_null(),
            ErrorKind::contract_violation,
            to_string(command) + " is stochastic and requires --seed");
  }
  return config;
}

FcrConfig fcr_config_from(const Json& c) {
  FcrConfig out;
  out.n = c["n"].get<Index>();
  out.p = c["p"].get<Index>();
  out.lambda = c["lambda"].get<double>();
  out.sigma2 = c["sigma2"].get<double>();
  out.gamma2 = c["gamma2"].get<double>();
  out.carve_fraction = c["carve_frac"].get<double>();
  out.rounds = c["rounds"].get<long>();
  out.level = c["level"].get<double>();
  out.seed = c["seed"].get<std::uint64_t>();
  out.n_draws = c["draws"].get<long>();
  out.burn_in = c["burn_in"].get<long>();
  out.step_scale = c["step_scale"].get<double>();
  out.threads = c["threads"].get<int>();
  return out;
}

ConsistencyConfig consistency_config_from(const Json& c) {
  ConsistencyConfig out;
  out.beta_star = c["beta_star"].get<double>();
  out.n_values = c["n_values"].get<std::vector<long>>();
  out.replications = c["replications"].get<long>();
  out.gamma2 = c["gamma2"].get<double>();
  out.seed = c["seed"].get<std::uint64_t>();
  out.threads = c["threads"].get<int>();
  return out;
}

std::vector<double> regular_grid(double min, double max, double step) {
  require(std::isfinite(min) && std::isfinite(max) && max >= min, ErrorKind::malformed_input,
          "grid: need finite min <= max");
  require(step > 0.0 && std::isfinite(step), ErrorKind::malformed_input,
          "grid: step must be positive");
  const double span = (max - min) / step;
  require(span < 1e7, ErrorKind::malformed_input, "grid: too many points");
  const long count = std::lround(span) + 1;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) out.push_back(min + static_cast<double>(k) * step);
  return out;
}

Json fcr_report_to_json(const FcrReport& report) {
  Json methods = Json::object();
  for (const FcrMethod m : kFcrMethods) {
    const auto i = static_cast<std::size_t>(m);
    methods[to_string(m)] = {{"fcr", number(report.fcr[i])},
                             {"coverage", number(report.coverage(m))},
                             {"rounds_used", report.rounds_used[i]}};
  }
  Json rounds = Json::array();
  for (const FcrRound& r : report.records) {
    Json entry = {{"index", r.index}};
    for (const FcrMethod m : kFcrMethods) {
      const MethodRound& mr = r.methods[static_cast<std::size_t>(m)];
      Json covered = Json::array();
      for (bool c : mr.covered) covered.push_back(c);
      Json lengths = Json::array();
      for (double l : mr.lengths) lengths.push_back(number(l));
      entry[to_string(m)] = {{"skipped", mr.skipped},
                             {"E", index_json(mr.E)},
                             {"covered", covered},
                             {"lengths", lengths},
                             {"noncoverage", number(mr.noncoverage)}};
    }
    rounds.push_back(entry);
  }
  return Json{{"command", "simulate-fcr"},
              {"config", config_json(report.config)},
              {"methods", methods},
              {"rounds", rounds}};
}

FcrReport fcr_report_from_json(const Json& doc) {
  require(doc.value("command", "") == "simulate-fcr", ErrorKind::malformed_input,
          "not an FCR report");
  try {
    FcrReport out;
    out.config = fcr_config_from(doc.at("config"));
    for (const FcrMethod m : kFcrMethods) {
      const auto i = static_cast<std::size_t>(m);
      const Json& entry = doc.at("methods").at(to_string(m));
      out.fcr[i] = as_number(entry.at("fcr"));
      out.rounds_used[i] = entry.at("rounds_used").get<long>();
    }
    for (const Json& entry : doc.at("rounds")) {
      FcrRound r;
      r.index = entry.at("index").get<long>();
      for (const FcrMethod m : kFcrMethods) {
        const Json& e = entry.at(to_string(m));
        MethodRound& mr = r.methods[static_cast<std::size_t>(m)];
        mr.skipped = e.at("skipped").get<bool>();
        mr.E = index_vector(e.at("E"));
        mr.covered = e.at("covered").get<std::vector<bool>>();
        for (const Json& l : e.at("lengths")) mr.lengths.push_back(as_number(l));
        mr.noncoverage = as_number(e.at("noncoverage"));
      }
      out.records.push_back(std::move(r));
    }
    return out;
  } catch (const Json::exception& e) {
    fail(ErrorKind::malformed_input, std::string("FCR report: ") + e.what());
  }
}

Json consistency_report_to_json(const ConsistencyReport& report) {
  Json rows = Json::array();
  for (const ConsistencyRow& r : report.rows) {
    rows.push_back({{"n", r.n},
                    {"randomized_mle", number(r.randomized_mle)},
                    {"nonrandomized_mle", number(r.nonrandomized_mle)},
                    {"unadjusted_mean", number(r.unadjusted_mean)},
                    {"unadjusted_mean_nonrandomized", number(r.unadjusted_mean_nonrandomized)}});
  }
  return Json{{"command", "consistency"},
              {"config", config_json(report.config)},
              {"median_absolute_error", rows}};
}

ConsistencyReport consistency_report_from_json(const Json& doc) {
  require(doc.value("command", "") == "consistency", ErrorKind::malformed_input,
          "not a consistency report");
  try {
    ConsistencyReport out;
    out.config = consistency_config_from(doc.at("config"));
    for (const Json& r : doc.at("median_absolute_error")) {
      ConsistencyRow row;
      row.n = r.at("n").get<long>();
      row.randomized_mle = as_number(r.at("randomized_mle"));
      row.nonrandomized_mle = as_number(r.at("nonrandomized_mle"));
      row.unadjusted_mean = as_number(r.at("unadjusted_mean"));
      row.unadjusted_mean_nonrandomized = as_number(r.at("unadjusted_mean_nonrandomized"));
      out.rows.push_back(row);
    }
    return out;
  } catch (const Json::exception& e) {
    fail(ErrorKind::malformed_input, std::string("consistency report: ") + e.what());
  }
}

Json curves_to_json(const UnivariateCurves& curves) {
  Json mu_rows = Json::array();
  for (const CurveRowMu& r : curves.mu_rows) {
    mu_rows.push_back({{"mu", r.mu},
                       {"exact_log_probability", number(r.exact_log_probability)},
                       {"neg_h_chernoff", number(r.neg_h_chernoff)},
                       {"neg_h_barrier", number(r.neg_h_barrier)}});
  }
  Json y_rows = Json::array();
  for (const CurveRowY& r : curves.y_rows) {
    y_rows.push_back({{"y", r.y},
                      {"unadjusted", number(r.unadjusted)},
                      {"exact_mle", number(r.exact_mle)},
                      {"approximate_mle", number(r.approximate_mle)},
                      {"randomized_mle", number(r.randomized_mle)}});
  }
  return Json{{"command", "demo-univariate"},
              {"gamma2", curves.gamma2},
              {"adjustment_curves", mu_rows},
              {"estimator_curves", y_rows}};
}

UnivariateCurves curves_from_json(const Json& doc) {
  require(doc.value("command", "") == "demo-univariate", ErrorKind::malformed_input,
          "not a univariate-curves report");
  try {
    UnivariateCurves out;
    out.gamma2 = doc.at("gamma2").get<double>();
    for (const Json& r : doc.at("adjustment_curves")) {
      out.mu_rows.push_back({r.at("mu").get<double>(), as_number(r.at("exact_log_probability")),
                             as_number(r.at("neg_h_chernoff")),
                             as_number(r.at("neg_h_barrier"))});
    }
    for (const Json& r : doc.at("estimator_curves")) {
      out.y_rows.push_back({r.at("y").get<double>(), as_number(r.at("unadjusted")),
                            as_number(r.at("exact_mle")), as_number(r.at("approximate_mle")),
                            as_number(r.at("randomized_mle"))});
    }
    return out;
  } catch (const Json::exception& e) {
    fail(ErrorKind::malformed_input, std::string("univariate-curves report: ") + e.what());
  }
}

Json run_command(Command command, const Json& config) {
  switch (command) {
    case Command::fit:
      return run_fit(config, true);
    case Command::estimate:
      return run_fit(config, false);
    case Command::simulate_fcr:
      return fcr_report_to_json(run_fcr_experiment(fcr_config_from(config)));
    case Command::demo_univariate: {
      const auto mu = regular_grid(config["mu_min"].get<double>(), config["mu_max"].get<double>(),
                                   config["mu_step"].get<double>());
      const auto y = regular_grid(config["y_min"].get<double>(), config["y_max"].get<double>(),
                                  config["y_step"].get<double>());
      Json doc = curves_to_json(univariate_curves(mu, y, config["gamma2"].get<double>()));
      doc["config"] = config;
      return doc;
    }
    case Command::consistency:
      return consistency_report_to_json(consistency_experiment(consistency_config_from(config)));
    case Command::summarize:
      return summarize_report(Json::parse(read_file(config["input"].get<std::string>())));
  }
  fail(ErrorKind::internal, "unhandled command");
}

Json summarize_fcr(const FcrReport& report) {
  Json methods = Json::object();
  for (const FcrMethod m : kFcrMethods) {
    const auto i = static_cast<std::size_t>(m);
    double noncoverage = 0.0;
    long used = 0;
    std::vector<double> lengths;
    double selected = 0.0;
    for (const FcrRound& r : report.records) {
      const MethodRound& mr = r.methods[i];
      if (mr.skipped) continue;
      noncoverage += mr.noncoverage;
      ++used;
      selected += static_cast<double>(mr.E.size());
      lengths.insert(lengths.end(), mr.lengths.begin(), mr.lengths.end());
    }
    const double fcr = used > 0 ? noncoverage / static_cast<double>(used) : kNaN;
    methods[to_string(m)] = {{"fcr", number(fcr)},
                             {"coverage", number(1.0 - fcr)},
                             {"rounds_used", used},
                             {"mean_selected", number(used > 0 ? selected / used : kNaN)},
                             {"mean_length", number(mean_of(lengths))}};
  }
  return Json{{"command", "simulate-fcr"},
              {"rounds", static_cast<long>(report.records.size())},
              {"seed", report.config.seed},
              {"methods", methods}};
}

Json summarize_consistency(const ConsistencyReport& report) {
  Json rows = Json::array();
  for (const ConsistencyRow& r : report.rows) {
    rows.push_back({{"n", r.n},
                    {"randomized_mle", number(r.randomized_mle)},
                    {"nonrandomized_mle", number(r.nonrandomized_mle)},
                    {"unadjusted_mean", number(r.unadjusted_mean)}});
  }
  bool decreasing = report.rows.size() >= 2;
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    if (!(report.rows[i].randomized_mle < report.rows[i - 1].randomized_mle)) decreasing = false;
  }
  return Json{{"command", "consistency"},
              {"replications", report.config.replications},
              {"seed", report.config.seed},
              {"rows", rows},
              {"randomized_error_decreasing", decreasing}};
}

Json summarize_curves(const UnivariateCurves& curves) {
  double err_barrier = 0.0;
  double err_chernoff = 0.0;
  for (const CurveRowMu& r : curves.mu_rows) {
    err_barrier += std::abs(r.neg_h_barrier - r.exact_log_probability);
    err_chernoff += std::abs(r.neg_h_chernoff - r.exact_log_probability);
  }
  const double count = static_cast<double>(curves.mu_rows.size());
  double gap = 0.0;
  long gap_points = 0;
  for (const CurveRowY& r : curves.y_rows) {
    if (std::isfinite(r.exact_mle) && std::isfinite(r.approximate_mle)) {
      gap = std::max(gap, std::abs(r.exact_mle - r.approximate_mle));
      ++gap_points;
    }
  }
  return Json{{"command", "demo-univariate"},
              {"mu_points", curves.mu_rows.size()},
              {"y_points", curves.y_rows.size()},
              {"mae_barrier", number(count > 0 ? err_barrier / count : kNaN)},
              {"mae_chernoff", number(count > 0 ? err_chernoff / count : kNaN)},
              {"max_mle_gap", number(gap_points > 0 ? gap : kNaN)}};
}

Json summarize_report(const Json& doc) {
  require(doc.is_object() && doc.contains("command"), ErrorKind::malformed_input,
          "summarize: input is not a report document");
  const std::string command = doc["command"].get<std::string>();
  if (command == "simulate-fcr") return summarize_fcr(fcr_report_from_json(doc));
  if (command == "consistency") return summarize_consistency(consistency_report_from_json(doc));
  if (command == "demo-univariate") return summarize_curves(curves_from_json(doc));
  if (command == "fit" || command == "estimate") {
    try {
      Json out = {{"command", command},
                  {"selected", doc.at("selection").at("E")},
                  {"regime", doc.at("selection").at("regime")}};
      if (doc.at("estimates").contains("point")) {
        out["point_estimate"] = doc["estimates"]["point"].at("beta_target");
      }
      if (doc.contains("posterior")) {
        std::vector<double> lengths;
        for (const Json& row : doc["posterior"].at("intervals")) {
          lengths.push_back(as_number(row.at("upper")) - as_number(row.at("lower")));
        }
        out["mean_interval_length"] = number(mean_of(lengths));
      }
      return out;
    } catch (const Json::exception& e) {
      fail(ErrorKind::malformed_input, std::string("summarize: ") + e.what());
    }
  }
  fail(ErrorKind::malformed_input, "summarize: unknown report command '" + command + "'");
}

std::string dump_report(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace selbayes
