#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scbal/balance.hpp"
#include "scbal/dgp.hpp"
#include "scbal/estimator.hpp"
#include "scbal/harness.hpp"
#include "scbal/solver.hpp"

namespace scbal {

/// Canonical compact JSON of everything that determines an experiment's
/// output. The worker count is left out because it does not affect results.
std::string spec_echo_json(const ExperimentSpec& spec);

/// ExperimentResult document: spec echo, master_seed, reps, wall_time_s and
/// per-estimator mean_bias / se / rmse arrays indexed by post-period. NaN is
/// written as null. With `include_timing` false wall_time_s is null, which
/// makes the document a pure function of the spec.
std::string experiment_result_json(const ExperimentResult& result, bool include_timing = true);

/// Tidy plot data: `period,estimator,bias,se`, one row per post-period and
/// estimator. Periods are absolute time indices t0+1..t_max.
void write_bias_csv(std::ostream& out, const ExperimentResult& result);

struct WeightsDocument {
  std::string treated_unit;
  std::vector<std::string> donor_labels;
  std::vector<double> weights;
  double objective = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  bool degenerate = false;
  std::vector<double> feasibility_residuals;
  /// Panel rows' unit labels, treated first; records the relabeling.
  std::vector<std::string> unit_order;
};

std::string weights_json(const WeightsDocument& doc);
/// Reads the fields written by weights_json. Only treated_unit and weights are
/// required; the weights map keeps file order.
WeightsDocument parse_weights_json(std::string_view text);

/// Weights in the order of `donor_labels`. Throws ValidationError when the
/// label sets differ or the values are not on the simplex.
SimplexWeights weights_for_donors(const WeightsDocument& doc,
                                  const std::vector<std::string>& donor_labels);

/// Factor values as a JSON array (treated first, then donors in the weights
/// file's order) or an object mapping unit label to value. Returns the values
/// ordered as `labels`.
std::vector<double> parse_mu_json(std::string_view text, const std::vector<std::string>& labels);

std::string eigen_audit_json(const std::vector<EigenAudit>& audits);

/// Ground truth of a simulated panel, keyed by the labels used in its CSV.
std::string truth_json(const SimulatedPanel& sim, const std::vector<std::string>& labels,
                       const std::optional<SimplexWeights>& planted_beta);

/// Reads a whole file; IoError when it cannot be read.
std::string read_text_file(const std::filesystem::path& path);
/// Writes atomically enough for CLI use; IoError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace scbal
