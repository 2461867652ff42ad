#include "scbal/balance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scbal {

BalanceMatrix build_b_matrix(const SimplexWeights& beta, BVariant variant) {
  const auto n = static_cast<Eigen::Index>(beta.size() + 1);
  BalanceMatrix out{Matrix::Zero(n, n), variant};
  Matrix& b = out.b;
  for (Eigen::Index j = 1; j < n; ++j) b(0, j) = beta[static_cast<std::size_t>(j - 1)];
  for (Eigen::Index i = 1; i < n; ++i) {
    b(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < n; ++j) {
      const double bj = beta[static_cast<std::size_t>(j - 1)];
      if (i != j) {
        b(i, j) = -bj;
      } else if (variant == BVariant::Corrected) {
        b(i, j) = 1.0 - bj;
      }
    }
  }
  return out;
}

EigenAudit eigen_audit(const BalanceMatrix& b, std::span<const double> mu) {
  const auto n = static_cast<std::size_t>(b.b.rows());
  if (b.b.cols() != b.b.rows() || mu.size() != n) {
    throw ValidationError("eigen_audit: B is " + std::to_string(b.b.rows()) + "x" +
                          std::to_string(b.b.cols()) + " but mu has " +
                          std::to_string(mu.size()) + " entries");
  }
  const Eigen::Map<const Vector> m(mu.data(), static_cast<Eigen::Index>(n));
  const Vector image = b.b * m;

  EigenAudit audit;
  audit.variant = b.variant;
  audit.residual_inf_norm = n == 0 ? 0.0 : (image - m).cwiseAbs().maxCoeff();
  audit.row1_residual = std::abs(image[0] - m[0]);
  for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(n); ++i) {
    audit.per_row_factor.push_back(m[i] != 0.0 ? image[i] / m[i]
                                               : std::numeric_limits<double>::quiet_NaN());
    audit.donor_row_beta_residual =
        std::max(audit.donor_row_beta_residual, std::abs(image[i] - b.b(0, i) * m[i]));
  }
  return audit;
}

BalanceDiagnostic conditional_bias_experiment(const FactorModelParams& params, std::size_t reps,
                                              std::uint64_t seed, std::size_t workers) {
  if (reps < 100) {
    throw ValidationError("conditional_bias_experiment needs at least 100 replications");
  }
  ExperimentSpec spec;
  spec.params = params;
  spec.mode = DgpMode::ConfoundedAssignment;
  spec.estimators = {EstimatorKind::OracleSC, EstimatorKind::Naive};
  spec.reps = reps;
  spec.master_seed = seed;
  spec.workers = workers;
  spec.retain_table = false;

  const ExperimentResult result = run_experiment(spec);
  return BalanceDiagnostic{result.summary(EstimatorKind::OracleSC),
                           result.summary(EstimatorKind::Naive), params.gamma};
}

std::size_t default_placebo_split(std::size_t t0) { return t0 / 2; }

std::vector<double> placebo_residuals(const Panel& panel, const SimplexWeights& weights,
                                      std::size_t split) {
  require_valid(panel);
  if (split >= panel.t0()) {
    throw ValidationError("placebo split " + std::to_string(split) +
                          " must be below t0 = " + std::to_string(panel.t0()));
  }
  if (weights.size() + 1 != panel.units()) {
    throw ValidationError("placebo: weights do not match the donor count");
  }
  const std::size_t treated = panel.treated_index();
  std::vector<double> out;
  out.reserve(panel.t0() - split);
  for (std::size_t t = split + 1; t <= panel.t0(); ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    double synthetic = 0.0;
    std::size_t d = 0;
    for (std::size_t i = 0; i < panel.units(); ++i) {
      if (i == treated) continue;
      synthetic += weights[d++] * panel.x(static_cast<Eigen::Index>(i), col);
    }
    out.push_back(panel.x(static_cast<Eigen::Index>(treated), col) - synthetic);
  }
  return out;
}

PlaceboResult placebo_test(const Panel& panel, std::size_t split, const SolverConfig& config) {
  require_valid(panel);
  if (split < 1 || split >= panel.t0()) {
    throw ValidationError("placebo split must satisfy 1 <= split < t0 (split = " +
                          std::to_string(split) + ", t0 = " + std::to_string(panel.t0()) +
                          "); too few fitting or held-out periods");
  }
  auto [donors, target] = pre_period_design(panel, split + 1);
  FitResult fit = fit_simplex_least_squares(donors, target, config);
  std::vector<double> residuals = placebo_residuals(panel, fit.weights, split);
  return PlaceboResult{split, std::move(fit), std::move(residuals)};
}

}  // namespace scbal
