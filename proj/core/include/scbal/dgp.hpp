#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "scbal/model.hpp"
#include "scbal/rng.hpp"

namespace scbal {

/// How the treated unit is chosen.
///  - DesignatedTreated: unit 0 is treated with probability one.
///  - ConfoundedAssignment: a softmax in gamma * mu over the units that are
///    neither the first minimizer nor the first maximizer of mu, so whichever
///    unit is drawn lies inside the donors' hull.
enum class DgpMode { DesignatedTreated, ConfoundedAssignment };

const char* to_string(DgpMode mode);

struct PlantedOracle {
  std::vector<double> mu;  // treated unit first, then the donors
  SimplexWeights beta;
  /// All donor mu are equal, so any simplex point reproduces the treated mu
  /// and the oracle weights are not unique.
  bool degenerate_donors = false;
};

/// Draws beta from a symmetric Dirichlet(concentration) and sets the treated
/// mu to sum_i beta_i donor_mu_i.
PlantedOracle plant_oracle(std::span<const double> donor_mu, double concentration,
                           RngSeed seed);

/// Deterministic variant of plant_oracle for a caller-supplied beta.
PlantedOracle plant_oracle(std::span<const double> donor_mu, const SimplexWeights& beta);

/// Treatment probabilities under ConfoundedAssignment; zero for the excluded
/// arg-min and arg-max units. Throws ValidationError when mu has fewer than
/// three entries.
std::vector<double> assignment_probabilities(std::span<const double> mu, double gamma);

/// Draws a one-hot assignment vector. `designated` names the treated unit in
/// DesignatedTreated mode.
std::vector<int> sample_assignment(std::span<const double> mu, double gamma, DgpMode mode,
                                   Engine& engine, std::size_t designated = 0);

std::vector<int> sample_assignment(std::span<const double> mu, double gamma, DgpMode mode,
                                   RngSeed seed, std::size_t designated = 0);

/// A simulated panel with its ground truth. Rows are relabeled so that the
/// treated unit sits at index 0 and donors keep their original relative order;
/// `unit_order[k]` is the original index of panel row k.
struct SimulatedPanel {
  Panel panel;
  SimplexWeights oracle_beta;  // min-norm oracle weights for the realized treated unit
  std::size_t treated_index = 0;  // original index of the treated unit
  std::vector<std::size_t> unit_order;
  std::vector<double> mu;     // factor values in panel order
  std::vector<double> alpha;  // planted effects, one per post-period
};

/// Simulates X and Y from the factor model with independent
/// N(0, sigma_{i,t}^2) noise. Throws ValidationError listing
/// validate_params violations, or FeasibilityError when the designated unit's
/// mu lies outside the donor hull.
SimulatedPanel simulate_panel(const FactorModelParams& params, DgpMode mode, Engine& engine);

SimulatedPanel simulate_panel(const FactorModelParams& params, DgpMode mode, RngSeed seed);

/// Throws ValidationError listing validate_params violations.
void require_valid(const FactorModelParams& params);

}  // namespace scbal
