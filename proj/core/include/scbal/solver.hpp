#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "scbal/model.hpp"

namespace scbal {

enum class StepRule { FixedLipschitz, Backtracking };

const char* to_string(StepRule rule);

struct SolverConfig {
  std::size_t max_iterations = 10000;
  /// Stop once the relative objective decrease of one iteration falls below
  /// this value.
  double objective_tolerance = 1e-12;
  StepRule step_rule = StepRule::FixedLipschitz;

  /// Optional instrumentation, called with the iteration number (0 for the
  /// starting point), the current iterate and its objective.
  std::function<void(std::size_t, std::span<const double>, double)> on_iterate;
};

/// Throws ValidationError if max_iterations < 1 or the tolerance is not positive.
void validate(const SolverConfig& config);

struct FitResult {
  SimplexWeights weights;
  double objective = 0.0;  // sum of squared pre-treatment residuals
  std::size_t iterations = 0;
  bool converged = false;
  /// Set when the donor Gram matrix is (numerically) singular, in which case
  /// the minimizer is not unique, or when every donor value is zero.
  bool degenerate = false;
};

/// Euclidean projection onto the probability simplex by the sort-and-threshold
/// rule. NaN entries are rejected with ValidationError.
SimplexWeights project_to_simplex(std::span<const double> v);

/// Same as project_to_simplex but writes into `out` (resized as needed) and
/// skips the SimplexWeights invariant check. Used in the solver's inner loop.
void project_to_simplex_into(std::span<const double> v, std::vector<double>& out,
                             std::vector<double>& scratch);

struct PowerIterationResult {
  double eigenvalue = 0.0;
  std::size_t iterations = 0;
};

/// Largest eigenvalue of a symmetric positive semidefinite matrix: at most
/// `max_iterations` steps, stopping early when the Rayleigh quotient changes
/// by less than `relative_tolerance`.
PowerIterationResult largest_eigenvalue(const Matrix& gram, std::size_t max_iterations = 50,
                                        double relative_tolerance = 1e-10);

/// Minimizes ||target - donors * beta||^2 over the probability simplex by
/// projected gradient descent started at uniform weights. `donors` holds one
/// column per donor and one row per fitting period.
FitResult fit_simplex_least_squares(const Matrix& donors, const Vector& target,
                                    const SolverConfig& config = {});

/// Fits donor weights to the treated unit's pre-treatment outcomes.
FitResult fit_weights(const Panel& panel, const SolverConfig& config = {});

/// Splits a panel's pre-period block into (donor matrix, treated series), using
/// the first `periods` pre-periods. Donors keep their panel order with the
/// treated row removed.
std::pair<Matrix, Vector> pre_period_design(const Panel& panel, std::size_t periods);

}  // namespace scbal
