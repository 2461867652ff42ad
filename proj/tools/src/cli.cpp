#include "scbal_cli/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "scbal/balance.hpp"
#include "scbal/config.hpp"
#include "scbal/dgp.hpp"
#include "scbal/estimator.hpp"
#include "scbal/harness.hpp"
#include "scbal/json_io.hpp"
#include "scbal/panel_csv.hpp"
#include "scbal/solver.hpp"

namespace scbal::cli {

namespace {

constexpr const char* kWorkersEnv = "SC_BALANCE_WORKERS";

struct SolverFlags {
  std::size_t max_iterations = SolverConfig{}.max_iterations;
  double tolerance = SolverConfig{}.objective_tolerance;
  std::string step_rule = "fixed_lipschitz";

  SolverConfig config() const {
    SolverConfig c;
    c.max_iterations = max_iterations;
    c.objective_tolerance = tolerance;
    if (step_rule == "backtracking") {
      c.step_rule = StepRule::Backtracking;
    } else if (step_rule != "fixed_lipschitz") {
      throw ValidationError("--step-rule must be fixed_lipschitz or backtracking");
    }
    validate(c);
    return c;
  }

  void attach(CLI::App* app) {
    app->add_option("--max-iterations", max_iterations, "Projected-gradient iteration cap");
    app->add_option("--tolerance", tolerance, "Relative objective decrease that stops the solver");
    app->add_option("--step-rule", step_rule, "fixed_lipschitz or backtracking");
  }
};

struct Options {
  std::string config;
  std::string panel;
  std::string weights;
  std::string mu;
  std::string out;
  std::string truth;
  std::string csv;
  std::string checkpoint;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::int64_t t0 = 0;
  std::int64_t split = 0;
  bool no_timing = false;
  SolverFlags solver;
};

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::optional<std::uint64_t> seed_flag(const CLI::App* cmd, const Options& o) {
  if (cmd->count("--seed") == 0) return std::nullopt;
  return o.seed;
}

RunConfig config_or_default(const std::string& path, std::optional<std::uint64_t> seed) {
  if (path.empty()) return parse_config_text("", seed);
  return load_config(path, seed);
}

LabeledPanel read_panel(const CLI::App* cmd, const Options& o) {
  std::optional<std::int64_t> t0;
  if (cmd->count("--t0") > 0) t0 = o.t0;
  return parse_panel_csv(o.panel, t0);
}

std::vector<std::string> donor_labels(const LabeledPanel& lp) {
  return {lp.labels.begin() + 1, lp.labels.end()};
}

// Flag beats environment beats config.
std::size_t worker_count(const CLI::App* cmd, const Options& o, std::size_t configured) {
  if (cmd->count("--workers") > 0) return o.workers;
  if (const char* env = std::getenv(kWorkersEnv); env != nullptr && *env != '\0') {
    std::size_t value = 0;
    const char* last = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, last, value);
    if (ec != std::errc{} || ptr != last) {
      throw ValidationError(std::string(kWorkersEnv) + " must be a non-negative integer");
    }
    return value;
  }
  return configured;
}

int run_simulate(const CLI::App* cmd, const Options& o, std::ostream& out) {
  const RunConfig config = config_or_default(o.config, seed_flag(cmd, o));
  const ExperimentSpec& spec = config.spec;
  const SimulatedPanel sim =
      simulate_panel(spec.params, spec.mode, RngSeed{spec.master_seed, 0});
  LabeledPanel labeled = label_panel(sim.panel, sim.unit_order);
  std::ostringstream csv;
  write_panel_csv(csv, labeled);
  emit(o.out, csv.str(), out);
  if (!o.truth.empty()) {
    write_text_file(o.truth, truth_json(sim, labeled.labels, config.planted_beta));
  }
  return kExitOk;
}

int run_fit(const CLI::App* cmd, const Options& o, std::ostream& out) {
  const SolverConfig solver = o.solver.config();
  const LabeledPanel lp = read_panel(cmd, o);
  const FitResult fit = fit_weights(lp.panel, solver);
  WeightsDocument doc;
  doc.treated_unit = lp.labels.front();
  doc.donor_labels = donor_labels(lp);
  doc.weights.assign(fit.weights.values().begin(), fit.weights.values().end());
  doc.objective = fit.objective;
  doc.converged = fit.converged;
  doc.iterations = fit.iterations;
  doc.degenerate = fit.degenerate;
  doc.feasibility_residuals = check_feasibility(lp.panel, fit.weights).residuals;
  doc.unit_order = lp.labels;
  emit(o.out, weights_json(doc), out);
  return kExitOk;
}

int run_effect(const CLI::App* cmd, const Options& o, std::ostream& out) {
  const LabeledPanel lp = read_panel(cmd, o);
  const WeightsDocument doc = parse_weights_json(read_text_file(o.weights));
  if (doc.treated_unit != lp.labels.front()) {
    throw ValidationError("weights file is for treated unit '" + doc.treated_unit +
                          "' but the panel treats '" + lp.labels.front() + "'");
  }
  const SimplexWeights weights = weights_for_donors(doc, donor_labels(lp));
  const EffectSeries effect = estimate_effect(lp.panel, weights);
  std::ostringstream csv;
  csv << "time,alpha_hat\n";
  for (std::size_t k = 0; k < effect.alpha_hat.size(); ++k) {
    csv << lp.times[lp.panel.pre_periods() + k] << ',' << format_double(effect.alpha_hat[k])
        << '\n';
  }
  emit(o.out, csv.str(), out);
  return kExitOk;
}

int run_balance_check(const CLI::App* cmd, const Options& o, std::ostream& out) {
  const bool from_files = !o.weights.empty() || !o.mu.empty();
  if (from_files == !o.config.empty()) {
    throw ValidationError("balance-check needs either --weights with --mu, or --config");
  }
  std::optional<SimplexWeights> beta;
  std::vector<double> mu;
  if (from_files) {
    if (o.weights.empty() || o.mu.empty()) {
      throw ValidationError("balance-check needs both --weights and --mu");
    }
    const WeightsDocument doc = parse_weights_json(read_text_file(o.weights));
    std::vector<std::string> labels{doc.treated_unit};
    labels.insert(labels.end(), doc.donor_labels.begin(), doc.donor_labels.end());
    beta = weights_for_donors(doc, doc.donor_labels);
    mu = parse_mu_json(read_text_file(o.mu), labels);
  } else {
    const RunConfig config = load_config(o.config, seed_flag(cmd, o));
    mu = config.spec.params.mu;
    beta = config.planted_beta ? *config.planted_beta : oracle_weights(mu, 0);
  }
  std::vector<EigenAudit> audits;
  for (BVariant variant : {BVariant::Verbatim, BVariant::Corrected}) {
    audits.push_back(eigen_audit(build_b_matrix(*beta, variant), mu));
  }
  emit(o.out, eigen_audit_json(audits), out);
  return kExitOk;
}

int run_montecarlo(const CLI::App* cmd, const Options& o, std::ostream& out) {
  RunConfig config = config_or_default(o.config, seed_flag(cmd, o));
  config.spec.workers = worker_count(cmd, o, config.spec.workers);
  RunOptions run;
  if (!o.checkpoint.empty()) run.checkpoint = o.checkpoint;
  const ExperimentResult result = run_experiment(config.spec, run);
  emit(o.out, experiment_result_json(result, !o.no_timing), out);
  if (!o.csv.empty()) {
    std::ostringstream csv;
    write_bias_csv(csv, result);
    write_text_file(o.csv, csv.str());
  }
  return kExitOk;
}

int run_placebo(const CLI::App* cmd, const Options& o, std::ostream& out) {
  const SolverConfig solver = o.solver.config();
  const LabeledPanel lp = read_panel(cmd, o);
  std::size_t split = default_placebo_split(lp.panel.t0());
  if (cmd->count("--split") > 0) {
    const auto end = lp.times.begin() + static_cast<std::ptrdiff_t>(lp.panel.pre_periods());
    const auto it = std::find(lp.times.begin(), end, o.split);
    if (it == end) {
      throw ValidationError("--split " + std::to_string(o.split) +
                            " is not a pre-treatment time of the panel");
    }
    split = static_cast<std::size_t>(it - lp.times.begin());
  }
  const PlaceboResult result = placebo_test(lp.panel, split, solver);
  std::ostringstream csv;
  csv << "time,residual\n";
  for (std::size_t k = 0; k < result.residuals.size(); ++k) {
    csv << lp.times[result.split + 1 + k] << ',' << format_double(result.residuals[k]) << '\n';
  }
  emit(o.out, csv.str(), out);
  return kExitOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic control estimation and balance diagnostics", "sc-balance"};
  app.require_subcommand(1);
  app.footer("\nExit codes: 0 success, 1 validation error or bad usage, 2 I/O error.\n"
             "Environment: " + std::string(kWorkersEnv) +
             " overrides the configured worker count (montecarlo --workers wins).\n\n" +
             config_reference());

  Options o;

  auto* simulate = app.add_subcommand("simulate", "Simulate one panel from a config");
  simulate->add_option("--config", o.config, "YAML config (defaults when omitted)");
  simulate->add_option("--seed", o.seed, "Override experiment.seed");
  simulate->add_option("--out", o.out, "Panel CSV path")->required();
  simulate->add_option("--truth", o.truth, "Write ground-truth JSON here");

  auto* fit = app.add_subcommand("fit", "Fit simplex weights to a panel's pre-period");
  fit->add_option("--panel", o.panel, "Panel CSV")->required();
  fit->add_option("--t0", o.t0, "Last pre-treatment time (inferred when omitted)");
  fit->add_option("--out", o.out, "Weights JSON path (stdout when omitted)");
  o.solver.attach(fit);

  auto* effect = app.add_subcommand("effect", "Estimate post-period effects from given weights");
  effect->add_option("--panel", o.panel, "Panel CSV")->required();
  effect->add_option("--t0", o.t0, "Last pre-treatment time (inferred when omitted)");
  effect->add_option("--weights", o.weights, "Weights JSON")->required();
  effect->add_option("--out", o.out, "Effect CSV path (stdout when omitted)");

  auto* balance = app.add_subcommand("balance-check", "Eigenvector audit of both B variants");
  balance->add_option("--weights", o.weights, "Weights JSON");
  balance->add_option("--mu", o.mu, "Factor values JSON (array or label map)");
  balance->add_option("--config", o.config, "Use the config's mu with oracle weights");
  balance->add_option("--seed", o.seed, "Override experiment.seed");
  balance->add_option("--out", o.out, "Audit JSON path (stdout when omitted)");

  auto* mc = app.add_subcommand("montecarlo", "Run a Monte Carlo experiment");
  mc->add_option("--config", o.config, "YAML config (defaults when omitted)");
  mc->add_option("--seed", o.seed, "Override experiment.seed");
  mc->add_option("--workers", o.workers, "Worker threads (0 = hardware concurrency)");
  mc->add_option("--out", o.out, "Result JSON path (stdout when omitted)");
  mc->add_option("--csv", o.csv, "Per-period bias CSV for plotting");
  mc->add_option("--checkpoint", o.checkpoint, "Checkpoint file; resumes when present");
  mc->add_flag("--no-timing", o.no_timing, "Write wall_time_s as null");

  auto* placebo = app.add_subcommand("placebo", "In-time placebo on the pre-period");
  placebo->add_option("--panel", o.panel, "Panel CSV")->required();
  placebo->add_option("--t0", o.t0, "Last pre-treatment time (inferred when omitted)");
  placebo->add_option("--split", o.split, "Last fitting time (default: pre-period midpoint)");
  placebo->add_option("--out", o.out, "Residual CSV path (stdout when omitted)");
  o.solver.attach(placebo);

  if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
    err << "error: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
    return kExitValidation;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (*simulate) return run_simulate(simulate, o, out);
    if (*fit) return run_fit(fit, o, out);
    if (*effect) return run_effect(effect, o, out);
    if (*balance) return run_balance_check(balance, o, out);
    if (*mc) return run_montecarlo(mc, o, out);
    if (*placebo) return run_placebo(placebo, o, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace scbal::cli
