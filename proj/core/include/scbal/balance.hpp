#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "scbal/harness.hpp"
#include "scbal/model.hpp"
#include "scbal/solver.hpp"

namespace scbal {

/// B = g(beta) for n = beta.size() + 1 units, treated unit first.
///
/// Verbatim:  B_ii = 0, B_i1 = 1 (i > 1), B_1j = beta_j (j > 1),
///            B_ij = -beta_j (i, j > 1, i != j).
/// Corrected: as Verbatim but B_ii = 1 - beta_i on donor rows, which is the
///            smallest change that makes mu an eigenvector with eigenvalue 1
///            for every feasible (beta, mu).
BalanceMatrix build_b_matrix(const SimplexWeights& beta, BVariant variant);

struct EigenAudit {
  BVariant variant = BVariant::Verbatim;
  double residual_inf_norm = 0.0;  // ||B mu - mu||_inf
  double row1_residual = 0.0;      // |(B mu)_1 - mu_1|
  /// (B mu)_i / mu_i for each donor row; NaN where mu_i == 0.
  std::vector<double> per_row_factor;
  /// max over donor rows of |(B mu)_i - B_1i mu_i|. Zero (up to rounding) for
  /// the verbatim construction whenever mu is feasible.
  double donor_row_beta_residual = 0.0;
};

/// Reports how far mu is from being a unit-eigenvalue eigenvector of B. The
/// audit makes no claim about which variant should pass.
EigenAudit eigen_audit(const BalanceMatrix& b, std::span<const double> mu);

struct BalanceDiagnostic {
  McSummary sc_summary;     // oracle-weight synthetic control
  McSummary naive_summary;  // uniform donor average, same panels
  double gamma = 0.0;
};

/// Monte Carlo check of the balancing property under mu-dependent assignment:
/// every replication draws Z from the confounded sampler, recomputes oracle
/// weights for the realized treated unit, simulates one panel and scores both
/// estimators on it.
BalanceDiagnostic conditional_bias_experiment(const FactorModelParams& params, std::size_t reps,
                                              std::uint64_t seed, std::size_t workers = 0);

/// Default in-time placebo split: the midpoint of the pre-period.
std::size_t default_placebo_split(std::size_t t0);

/// X_{1,t} - sum_i beta_i X_{i,t} for t = split+1..t0.
std::vector<double> placebo_residuals(const Panel& panel, const SimplexWeights& weights,
                                      std::size_t split);

struct PlaceboResult {
  std::size_t split = 0;
  FitResult fit;                   // weights fitted on periods 0..split
  std::vector<double> residuals;   // periods split+1..t0
};

/// Refits weights on pre-periods 0..split and reports the gap on the held-out
/// pre-periods, where the true effect is zero. Requires 1 <= split < t0.
PlaceboResult placebo_test(const Panel& panel, std::size_t split,
                           const SolverConfig& config = {});

}  // namespace scbal
