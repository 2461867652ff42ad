#include "scbal/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scbal/panel_csv.hpp"

namespace scbal {

namespace {

using ojson = nlohmann::ordered_json;

ojson number(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson numbers(const std::vector<double>& values) {
  ojson out = ojson::array();
  for (double v : values) out.push_back(number(v));
  return out;
}

ojson params_json(const FactorModelParams& p) {
  ojson sigma = ojson::array();
  for (Eigen::Index i = 0; i < p.sigma.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index t = 0; t < p.sigma.cols(); ++t) row.push_back(number(p.sigma(i, t)));
    sigma.push_back(std::move(row));
  }
  ojson out;
  out["n"] = p.n;
  out["t0"] = p.t0;
  out["t_max"] = p.t_max;
  out["delta"] = numbers(p.delta);
  out["lambda"] = numbers(p.lambda);
  out["mu"] = numbers(p.mu);
  out["sigma"] = std::move(sigma);
  out["alpha"] = numbers(p.alpha);
  out["gamma"] = number(p.gamma);
  return out;
}

ojson spec_json(const ExperimentSpec& spec) {
  ojson estimators = ojson::array();
  for (EstimatorKind kind : spec.estimators) estimators.push_back(to_string(kind));
  ojson out;
  out["model"] = params_json(spec.params);
  out["mode"] = to_string(spec.mode);
  out["estimators"] = std::move(estimators);
  out["reps"] = spec.reps;
  out["master_seed"] = spec.master_seed;
  out["retain_table"] = spec.retains_table();
  out["solver"] = {{"max_iterations", spec.solver.max_iterations},
                   {"objective_tolerance", number(spec.solver.objective_tolerance)},
                   {"step_rule", to_string(spec.solver.step_rule)}};
  return out;
}

ojson parse(std::string_view text, const char* what) {
  try {
    return ojson::parse(text);
  } catch (const ojson::exception& e) {
    throw ValidationError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

double finite_number(const ojson& node, const std::string& where) {
  if (!node.is_number()) throw ValidationError(where + " must be a number");
  const double v = node.get<double>();
  if (!std::isfinite(v)) throw ValidationError(where + " must be finite");
  return v;
}

}  // namespace

std::string spec_echo_json(const ExperimentSpec& spec) { return spec_json(spec).dump(); }

std::string experiment_result_json(const ExperimentResult& result, bool include_timing) {
  ojson estimators = ojson::object();
  for (const auto& outcome : result.outcomes) {
    const McSummary& s = outcome.summary;
    estimators[to_string(outcome.kind)] = {{"replications", s.replications},
                                           {"se_defined", s.se_defined()},
                                           {"mean_bias", numbers(s.mean_bias_per_period)},
                                           {"se", numbers(s.se_per_period)},
                                           {"rmse", numbers(s.rmse_per_period)}};
  }
  ojson doc;
  doc["spec"] = spec_json(result.spec);
  doc["master_seed"] = result.spec.master_seed;
  doc["reps"] = result.spec.reps;
  doc["wall_time_s"] = include_timing ? number(result.wall_time_s) : ojson(nullptr);
  doc["estimators"] = std::move(estimators);
  return doc.dump(2) + "\n";
}

void write_bias_csv(std::ostream& out, const ExperimentResult& result) {
  out << "period,estimator,bias,se\n";
  const std::size_t first = result.spec.params.t0 + 1;
  for (const auto& outcome : result.outcomes) {
    const McSummary& s = outcome.summary;
    for (std::size_t k = 0; k < s.mean_bias_per_period.size(); ++k) {
      out << first + k << ',' << to_string(outcome.kind) << ','
          << format_double(s.mean_bias_per_period[k]) << ',';
      if (std::isfinite(s.se_per_period[k])) out << format_double(s.se_per_period[k]);
      out << '\n';
    }
  }
}

std::string weights_json(const WeightsDocument& doc) {
  if (doc.donor_labels.size() != doc.weights.size()) {
    throw ValidationError("weights document: label and weight counts differ");
  }
  ojson weights = ojson::object();
  for (std::size_t i = 0; i < doc.weights.size(); ++i) {
    weights[doc.donor_labels[i]] = number(doc.weights[i]);
  }
  ojson out;
  out["treated_unit"] = doc.treated_unit;
  out["weights"] = std::move(weights);
  out["objective"] = number(doc.objective);
  out["converged"] = doc.converged;
  out["iterations"] = doc.iterations;
  out["degenerate"] = doc.degenerate;
  if (!doc.feasibility_residuals.empty()) {
    double max_abs = 0.0;
    double sum = 0.0;
    for (double r : doc.feasibility_residuals) {
      max_abs = std::max(max_abs, std::abs(r));
      sum += r;
    }
    out["feasibility"] = {
        {"residuals", numbers(doc.feasibility_residuals)},
        {"mean", number(sum / static_cast<double>(doc.feasibility_residuals.size()))},
        {"max_abs", number(max_abs)}};
  }
  if (!doc.unit_order.empty()) out["unit_order"] = doc.unit_order;
  return out.dump(2) + "\n";
}

WeightsDocument parse_weights_json(std::string_view text) {
  const ojson doc = parse(text, "weights file");
  if (!doc.is_object()) throw ValidationError("weights file must hold a JSON object");
  WeightsDocument out;
  if (!doc.contains("treated_unit") || !doc["treated_unit"].is_string()) {
    throw ValidationError("weights file: 'treated_unit' must be a string");
  }
  out.treated_unit = doc["treated_unit"].get<std::string>();
  if (!doc.contains("weights") || !doc["weights"].is_object() || doc["weights"].empty()) {
    throw ValidationError("weights file: 'weights' must be a non-empty object");
  }
  for (const auto& [label, value] : doc["weights"].items()) {
    out.donor_labels.push_back(label);
    out.weights.push_back(finite_number(value, "weights file: weight of '" + label + "'"));
  }
  if (doc.contains("objective") && doc["objective"].is_number()) {
    out.objective = doc["objective"].get<double>();
  }
  if (doc.contains("converged") && doc["converged"].is_boolean()) {
    out.converged = doc["converged"].get<bool>();
  }
  if (doc.contains("iterations") && doc["iterations"].is_number_unsigned()) {
    out.iterations = doc["iterations"].get<std::size_t>();
  }
  if (doc.contains("degenerate") && doc["degenerate"].is_boolean()) {
    out.degenerate = doc["degenerate"].get<bool>();
  }
  if (doc.contains("unit_order") && doc["unit_order"].is_array()) {
    out.unit_order = doc["unit_order"].get<std::vector<std::string>>();
  }
  return out;
}

SimplexWeights weights_for_donors(const WeightsDocument& doc,
                                  const std::vector<std::string>& donor_labels) {
  const std::set<std::string> expected(donor_labels.begin(), donor_labels.end());
  const std::set<std::string> given(doc.donor_labels.begin(), doc.donor_labels.end());
  if (expected != given || donor_labels.size() != doc.donor_labels.size()) {
    throw ValidationError("weights file donors do not match the panel's donor units");
  }
  std::vector<double> ordered;
  ordered.reserve(donor_labels.size());
  for (const auto& label : donor_labels) {
    const auto it = std::find(doc.donor_labels.begin(), doc.donor_labels.end(), label);
    ordered.push_back(doc.weights[static_cast<std::size_t>(it - doc.donor_labels.begin())]);
  }
  SimplexCheck check = check_simplex(std::move(ordered));
  if (!check.accepted()) {
    throw ValidationError("weights file: " + check.violations.front().describe());
  }
  return *std::move(check.weights);
}

std::vector<double> parse_mu_json(std::string_view text, const std::vector<std::string>& labels) {
  const ojson doc = parse(text, "mu file");
  std::vector<double> out;
  if (doc.is_array()) {
    if (doc.size() != labels.size()) {
      throw ValidationError("mu file has " + std::to_string(doc.size()) + " values, expected " +
                            std::to_string(labels.size()));
    }
    for (std::size_t i = 0; i < doc.size(); ++i) {
      out.push_back(finite_number(doc[i], "mu file entry " + std::to_string(i)));
    }
    return out;
  }
  if (!doc.is_object()) throw ValidationError("mu file must hold an array or an object");
  if (doc.size() != labels.size()) {
    throw ValidationError("mu file has " + std::to_string(doc.size()) + " units, expected " +
                          std::to_string(labels.size()));
  }
  for (const auto& label : labels) {
    if (!doc.contains(label)) throw ValidationError("mu file has no value for unit '" + label + "'");
    out.push_back(finite_number(doc[label], "mu of '" + label + "'"));
  }
  return out;
}

std::string eigen_audit_json(const std::vector<EigenAudit>& audits) {
  ojson variants = ojson::object();
  for (const auto& a : audits) {
    variants[to_string(a.variant)] = {{"residual_inf_norm", number(a.residual_inf_norm)},
                                      {"row1_residual", number(a.row1_residual)},
                                      {"per_row_factor", numbers(a.per_row_factor)},
                                      {"donor_row_beta_residual",
                                       number(a.donor_row_beta_residual)}};
  }
  return ojson{{"variants", std::move(variants)}}.dump(2) + "\n";
}

std::string truth_json(const SimulatedPanel& sim, const std::vector<std::string>& labels,
                       const std::optional<SimplexWeights>& planted_beta) {
  ojson beta = ojson::object();
  for (std::size_t i = 0; i < sim.oracle_beta.size(); ++i) {
    beta[labels.at(i + 1)] = number(sim.oracle_beta[i]);
  }
  ojson mu = ojson::object();
  for (std::size_t i = 0; i < sim.mu.size(); ++i) mu[labels.at(i)] = number(sim.mu[i]);
  ojson out;
  out["treated_unit"] = labels.at(0);
  out["treated_index"] = sim.treated_index;
  out["unit_order"] = labels;
  out["t0"] = sim.panel.t0();
  out["t_max"] = sim.panel.t_max();
  out["alpha"] = numbers(sim.alpha);
  out["mu"] = std::move(mu);
  out["oracle_weights"] = std::move(beta);
  if (planted_beta) {
    out["planted_weights"] = numbers(std::vector<double>(planted_beta->values().begin(),
                                                         planted_beta->values().end()));
  }
  return out.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace scbal
