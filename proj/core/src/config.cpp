#include "scbal/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "scbal/dgp.hpp"

namespace scbal {

namespace {

constexpr std::size_t kDefaultN = 20;
constexpr std::size_t kDefaultT0 = 30;
constexpr std::size_t kDefaultTMax = 40;
constexpr double kDefaultDelta = 0.0;
constexpr double kDefaultLambda = 1.0;
constexpr double kDefaultMuLow = -1.0;
constexpr double kDefaultMuHigh = 1.0;
constexpr double kDefaultSigma = 0.2;
constexpr double kDefaultAlpha = 1.0;
constexpr double kDefaultGamma = 2.0;

void reject_unknown(const YAML::Node& node, const std::string& path,
                    const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ValidationError("config: '" + path + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) {
      throw ValidationError("config: unknown key '" + (path.empty() ? key : path + "." + key) +
                            "'");
    }
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError("config: '" + path + "' has an invalid value");
  }
}

// A scalar broadcast to `length`, or an explicit list (length checked later
// by validate_params so the message names the invariant).
std::vector<double> series(const YAML::Node& node, const std::string& path, std::size_t length,
                           double fallback) {
  if (!node) return std::vector<double>(length, fallback);
  if (node.IsScalar()) return std::vector<double>(length, scalar<double>(node, path));
  if (node.IsSequence()) return scalar<std::vector<double>>(node, path);
  throw ValidationError("config: '" + path + "' must be a number or a list of numbers");
}

std::vector<double> evenly_spaced(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

Matrix sigma_matrix(const YAML::Node& node, std::size_t n, std::size_t periods) {
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(periods);
  if (!node) return Matrix::Constant(rows, cols, kDefaultSigma);
  if (node.IsScalar()) return Matrix::Constant(rows, cols, scalar<double>(node, "model.sigma"));
  if (!node.IsSequence()) throw ValidationError("config: 'model.sigma' has an invalid shape");
  if (node.size() > 0 && node[0].IsSequence()) {
    Matrix m(static_cast<Eigen::Index>(node.size()),
             static_cast<Eigen::Index>(node[0].size()));
    for (std::size_t i = 0; i < node.size(); ++i) {
      const auto row = scalar<std::vector<double>>(node[i], "model.sigma");
      if (static_cast<Eigen::Index>(row.size()) != m.cols()) {
        throw ValidationError("config: 'model.sigma' rows have unequal lengths");
      }
      for (std::size_t t = 0; t < row.size(); ++t) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = row[t];
      }
    }
    return m;
  }
  // One scale per unit, constant over time.
  const auto per_unit = scalar<std::vector<double>>(node, "model.sigma");
  Matrix m(static_cast<Eigen::Index>(per_unit.size()), cols);
  for (std::size_t i = 0; i < per_unit.size(); ++i) m.row(static_cast<Eigen::Index>(i)).setConstant(per_unit[i]);
  return m;
}

struct MuResult {
  std::vector<double> mu;
  std::optional<SimplexWeights> planted;
};

MuResult build_mu(const YAML::Node& node, std::size_t n, std::uint64_t seed) {
  if (!node) return {evenly_spaced(kDefaultMuLow, kDefaultMuHigh, n), std::nullopt};
  if (node.IsSequence()) return {scalar<std::vector<double>>(node, "model.mu"), std::nullopt};
  if (!node.IsMap()) throw ValidationError("config: 'model.mu' must be a list or a mapping");
  reject_unknown(node, "model.mu", {"spread", "donors", "plant_concentration"});

  const bool has_spread = static_cast<bool>(node["spread"]);
  const bool has_donors = static_cast<bool>(node["donors"]);
  const bool planted = static_cast<bool>(node["plant_concentration"]);
  if (has_spread == has_donors) {
    throw ValidationError("config: 'model.mu' needs exactly one of 'spread' or 'donors'");
  }
  if (has_donors && !planted) {
    throw ValidationError("config: 'model.mu.donors' requires 'plant_concentration'");
  }

  std::pair<double, double> range{kDefaultMuLow, kDefaultMuHigh};
  if (has_spread) {
    const auto bounds = scalar<std::vector<double>>(node["spread"], "model.mu.spread");
    if (bounds.size() != 2) throw ValidationError("config: 'model.mu.spread' must be [low, high]");
    range = {bounds[0], bounds[1]};
  }
  if (!planted) return {evenly_spaced(range.first, range.second, n), std::nullopt};

  if (n < 3) throw ValidationError("config: a planted treated unit needs n >= 3");
  const std::vector<double> donors =
      has_donors ? scalar<std::vector<double>>(node["donors"], "model.mu.donors")
                 : evenly_spaced(range.first, range.second, n - 1);
  if (donors.size() + 1 != n) {
    throw ValidationError("config: 'model.mu.donors' must list n - 1 = " +
                          std::to_string(n - 1) + " values");
  }
  const double concentration = scalar<double>(node["plant_concentration"], "model.mu.plant_concentration");
  PlantedOracle plant = plant_oracle(donors, concentration, RngSeed{seed, kPlantStream});
  return {std::move(plant.mu), std::move(plant.beta)};
}

}  // namespace

RunConfig parse_config_text(std::string_view text, std::optional<std::uint64_t> seed_override) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ValidationError(std::string("config: malformed YAML: ") + e.what());
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  reject_unknown(root, "", {"model", "experiment", "solver"});

  const YAML::Node model = root["model"] ? root["model"] : YAML::Node(YAML::NodeType::Map);
  const YAML::Node experiment =
      root["experiment"] ? root["experiment"] : YAML::Node(YAML::NodeType::Map);
  const YAML::Node solver = root["solver"] ? root["solver"] : YAML::Node(YAML::NodeType::Map);
  reject_unknown(model, "model",
                 {"n", "t0", "t_max", "delta", "lambda", "mu", "sigma", "alpha", "gamma"});
  reject_unknown(experiment, "experiment",
                 {"mode", "estimators", "reps", "seed", "workers", "retain_table"});
  reject_unknown(solver, "solver", {"max_iterations", "objective_tolerance", "step_rule"});

  RunConfig config;
  ExperimentSpec& spec = config.spec;

  if (experiment["seed"]) spec.master_seed = scalar<std::uint64_t>(experiment["seed"], "experiment.seed");
  if (seed_override) spec.master_seed = *seed_override;
  if (experiment["reps"]) spec.reps = scalar<std::size_t>(experiment["reps"], "experiment.reps");
  if (const auto& node = experiment["mode"]) {
    const auto mode = scalar<std::string>(node, "experiment.mode");
    if (mode == "confounded") {
      spec.mode = DgpMode::ConfoundedAssignment;
    } else if (mode == "designated") {
      spec.mode = DgpMode::DesignatedTreated;
    } else {
      throw ValidationError("config: experiment.mode must be 'confounded' or 'designated'");
    }
  }
  if (const auto& node = experiment["estimators"]) {
    spec.estimators.clear();
    for (const auto& name : scalar<std::vector<std::string>>(node, "experiment.estimators")) {
      const auto kind = parse_estimator(name);
      if (!kind) throw ValidationError("config: unknown estimator '" + name + "'");
      spec.estimators.push_back(*kind);
    }
  }
  if (const auto& node = experiment["workers"]) {
    const auto text_value = scalar<std::string>(node, "experiment.workers");
    spec.workers = text_value == "auto" ? 0 : scalar<std::size_t>(node, "experiment.workers");
  }
  if (const auto& node = experiment["retain_table"]) {
    const auto text_value = scalar<std::string>(node, "experiment.retain_table");
    if (text_value != "auto") spec.retain_table = scalar<bool>(node, "experiment.retain_table");
  }

  if (solver["max_iterations"]) {
    spec.solver.max_iterations = scalar<std::size_t>(solver["max_iterations"], "solver.max_iterations");
  }
  if (solver["objective_tolerance"]) {
    spec.solver.objective_tolerance =
        scalar<double>(solver["objective_tolerance"], "solver.objective_tolerance");
  }
  if (const auto& node = solver["step_rule"]) {
    const auto rule = scalar<std::string>(node, "solver.step_rule");
    if (rule == "fixed_lipschitz") {
      spec.solver.step_rule = StepRule::FixedLipschitz;
    } else if (rule == "backtracking") {
      spec.solver.step_rule = StepRule::Backtracking;
    } else {
      throw ValidationError("config: solver.step_rule must be 'fixed_lipschitz' or 'backtracking'");
    }
  }

  FactorModelParams& p = spec.params;
  p.n = model["n"] ? scalar<std::size_t>(model["n"], "model.n") : kDefaultN;
  p.t0 = model["t0"] ? scalar<std::size_t>(model["t0"], "model.t0") : kDefaultT0;
  p.t_max = model["t_max"] ? scalar<std::size_t>(model["t_max"], "model.t_max") : kDefaultTMax;
  if (p.t_max <= p.t0) {
    throw ValidationError("config: model.t_max must exceed model.t0");
  }
  p.delta = series(model["delta"], "model.delta", p.periods(), kDefaultDelta);
  p.lambda = series(model["lambda"], "model.lambda", p.periods(), kDefaultLambda);
  p.alpha = series(model["alpha"], "model.alpha", p.post_periods(), kDefaultAlpha);
  p.sigma = sigma_matrix(model["sigma"], p.n, p.periods());
  p.gamma = model["gamma"] ? scalar<double>(model["gamma"], "model.gamma") : kDefaultGamma;
  MuResult mu = build_mu(model["mu"], p.n, spec.master_seed);
  p.mu = std::move(mu.mu);
  config.planted_beta = std::move(mu.planted);

  validate(spec);
  return config;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading config " + path.string());
  return parse_config_text(buffer.str(), seed_override);
}

std::string config_reference() {
  std::ostringstream os;
  os << "Config keys (YAML; every key optional):\n"
     << "  model:\n"
     << "    n: " << kDefaultN << "                 units\n"
     << "    t0: " << kDefaultT0 << "                last pre-treatment period\n"
     << "    t_max: " << kDefaultTMax << "             last period\n"
     << "    delta: " << kDefaultDelta << "              number or list of t_max+1\n"
     << "    lambda: " << kDefaultLambda << "             number or list of t_max+1\n"
     << "    mu: {spread: [" << kDefaultMuLow << ", " << kDefaultMuHigh << "]}\n"
     << "        list of n values, {spread: [lo, hi]} (evenly spaced), or\n"
     << "        {spread|donors: ..., plant_concentration: c} to plant unit 0\n"
     << "        inside the donor hull with Dirichlet(c) weights\n"
     << "    sigma: " << kDefaultSigma << "            number, list per unit, or n x (t_max+1) rows\n"
     << "    alpha: " << kDefaultAlpha << "              number or list of t_max-t0\n"
     << "    gamma: " << kDefaultGamma << "              assignment sharpness (0 = uniform)\n"
     << "  experiment:\n"
     << "    mode: confounded        confounded | designated\n"
     << "    estimators: [oracle_sc, naive]   any of oracle_sc, fitted_sc, naive\n"
     << "    reps: 1000\n"
     << "    seed: 1\n"
     << "    workers: auto           or a positive integer\n"
     << "    retain_table: auto      keep per-replication estimates (auto: reps <= "
     << kMaxRetainedReplications << ")\n"
     << "  solver:\n"
     << "    max_iterations: 10000\n"
     << "    objective_tolerance: 1e-12\n"
     << "    step_rule: fixed_lipschitz   or backtracking\n";
  return os.str();
}

}  // namespace scbal
