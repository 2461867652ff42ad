#include "scbal/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace scbal {

namespace {

// Sum of the positive entries taken in descending order, which is the order
// the threshold rule accumulates them in.
double descending_positive_sum(std::span<const double> w, std::vector<double>& scratch) {
  scratch.assign(w.begin(), w.end());
  std::sort(scratch.begin(), scratch.end(), std::greater<>());
  double s = 0.0;
  for (double x : scratch) {
    if (x <= 0.0) break;
    s += x;
  }
  return s;
}

}  // namespace

const char* to_string(StepRule rule) {
  return rule == StepRule::FixedLipschitz ? "fixed_lipschitz" : "backtracking";
}

void validate(const SolverConfig& config) {
  if (config.max_iterations < 1) throw ValidationError("solver max_iterations must be >= 1");
  if (!(config.objective_tolerance > 0.0)) {
    throw ValidationError("solver objective_tolerance must be positive");
  }
}

void project_to_simplex_into(std::span<const double> v, std::vector<double>& out,
                             std::vector<double>& scratch) {
  const std::size_t d = v.size();
  scratch.assign(v.begin(), v.end());
  std::sort(scratch.begin(), scratch.end(), std::greater<>());

  double cumulative = 0.0;
  double theta_sum = 0.0;
  std::size_t rho = 0;
  for (std::size_t j = 0; j < d; ++j) {
    cumulative += scratch[j];
    if (scratch[j] - (cumulative - 1.0) / static_cast<double>(j + 1) > 0.0) {
      rho = j + 1;
      theta_sum = cumulative;
    }
  }
  const double theta = (theta_sum - 1.0) / static_cast<double>(rho);

  out.resize(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = std::max(v[i] - theta, 0.0);

  // Push rounding error into the largest coordinate until the descending sum
  // is exactly one. This makes the projection a fixed point of itself.
  const auto largest = static_cast<std::size_t>(
      std::distance(out.begin(), std::max_element(out.begin(), out.end())));
  for (int attempt = 0; attempt < 4; ++attempt) {
    const double s = descending_positive_sum(out, scratch);
    if (s == 1.0) break;
    out[largest] = std::max(out[largest] + (1.0 - s), 0.0);
  }
}

SimplexWeights project_to_simplex(std::span<const double> v) {
  if (v.empty()) throw ValidationError("project_to_simplex: input is empty");
  for (double x : v) {
    if (!std::isfinite(x)) throw ValidationError("project_to_simplex: non-finite input");
  }
  std::vector<double> out;
  std::vector<double> scratch;
  project_to_simplex_into(v, out, scratch);
  return SimplexWeights::make(std::move(out));
}

PowerIterationResult largest_eigenvalue(const Matrix& gram, std::size_t max_iterations,
                                        double relative_tolerance) {
  const Eigen::Index k = gram.rows();
  PowerIterationResult result;
  if (k == 0) return result;

  Vector v = Vector::Ones(k) / std::sqrt(static_cast<double>(k));
  Vector w = gram * v;
  if (w.norm() == 0.0) {
    // Start is in the null space; restart from the heaviest coordinate.
    Eigen::Index heaviest = 0;
    gram.diagonal().maxCoeff(&heaviest);
    v = Vector::Unit(k, heaviest);
    w = gram * v;
    if (w.norm() == 0.0) return result;
  }

  double estimate = v.dot(w);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    v = w / w.norm();
    w = gram * v;
    const double next = v.dot(w);
    result.iterations = it;
    const bool settled = std::abs(next - estimate) <= relative_tolerance * std::abs(next);
    estimate = next;
    if (settled) break;
  }
  // The Rayleigh quotient never exceeds the top eigenvalue; the largest
  // diagonal entry is another lower bound that guards a poor start.
  result.eigenvalue = std::max(estimate, gram.diagonal().maxCoeff());
  return result;
}

FitResult fit_simplex_least_squares(const Matrix& donors, const Vector& target,
                                    const SolverConfig& config) {
  validate(config);
  if (donors.cols() < 1) throw ValidationError("fit requires at least one donor");
  if (donors.rows() < 1) throw ValidationError("fit requires at least one period");
  if (donors.rows() != target.size()) {
    throw ValidationError("donor matrix and target series disagree on period count");
  }

  const auto k = static_cast<std::size_t>(donors.cols());
  std::vector<double> beta(k, 1.0 / static_cast<double>(k));
  auto beta_view = [&] { return Eigen::Map<const Vector>(beta.data(), donors.cols()); };

  Vector residual = target - donors * beta_view();
  double objective = residual.squaredNorm();
  if (config.on_iterate) config.on_iterate(0, beta, objective);

  const Matrix gram = donors.transpose() * donors;
  const double lipschitz = largest_eigenvalue(gram).eigenvalue;

  if (!(lipschitz > 0.0)) {
    return FitResult{SimplexWeights::make(std::move(beta)), objective, 0, false, true};
  }

  bool degenerate = false;
  if (k > 1) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    degenerate = eig.eigenvalues().minCoeff() < 1e-10 * lipschitz;
  }

  std::vector<double> trial(k);
  std::vector<double> candidate;
  std::vector<double> scratch;
  Vector gradient(donors.cols());
  Vector trial_residual(target.size());

  double step = 1.0 / lipschitz;
  std::size_t iterations = 0;
  bool converged = false;

  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    gradient.noalias() = -donors.transpose() * residual;  // gradient of 0.5 * objective
    double next_objective = 0.0;

    if (config.step_rule == StepRule::FixedLipschitz) {
      for (std::size_t i = 0; i < k; ++i) trial[i] = beta[i] - step * gradient[static_cast<Eigen::Index>(i)];
      project_to_simplex_into(trial, candidate, scratch);
      trial_residual.noalias() =
          target - donors * Eigen::Map<const Vector>(candidate.data(), donors.cols());
      next_objective = trial_residual.squaredNorm();
    } else {
      // Armijo-type backtracking on the quadratic upper model, starting from
      // twice the previously accepted step.
      step *= 2.0;
      for (int halvings = 0; halvings < 64; ++halvings) {
        for (std::size_t i = 0; i < k; ++i) trial[i] = beta[i] - step * gradient[static_cast<Eigen::Index>(i)];
        project_to_simplex_into(trial, candidate, scratch);
        trial_residual.noalias() =
            target - donors * Eigen::Map<const Vector>(candidate.data(), donors.cols());
        next_objective = trial_residual.squaredNorm();
        double linear = 0.0;
        double distance = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          const double diff = candidate[i] - beta[i];
          linear += gradient[static_cast<Eigen::Index>(i)] * diff;
          distance += diff * diff;
        }
        if (0.5 * next_objective <= 0.5 * objective + linear + distance / (2.0 * step)) break;
        step *= 0.5;
      }
    }

    const double previous = objective;
    beta.swap(candidate);
    residual.swap(trial_residual);
    objective = next_objective;
    iterations = it;
    if (config.on_iterate) config.on_iterate(it, beta, objective);

    if (previous == 0.0 || previous - objective < config.objective_tolerance * previous) {
      converged = true;
      break;
    }
  }

  return FitResult{SimplexWeights::make(std::move(beta)), objective, iterations, converged,
                   degenerate};
}

std::pair<Matrix, Vector> pre_period_design(const Panel& panel, std::size_t periods) {
  require_valid(panel);
  if (periods < 1 || periods > panel.pre_periods()) {
    throw ValidationError("requested " + std::to_string(periods) +
                          " fitting periods but the panel has " +
                          std::to_string(panel.pre_periods()) + " pre-periods");
  }
  const std::size_t treated = panel.treated_index();
  const auto rows = static_cast<Eigen::Index>(periods);
  Matrix donors(rows, static_cast<Eigen::Index>(panel.units() - 1));
  Eigen::Index column = 0;
  for (std::size_t i = 0; i < panel.units(); ++i) {
    if (i == treated) continue;
    donors.col(column++) = panel.x.row(static_cast<Eigen::Index>(i)).head(rows).transpose();
  }
  Vector target = panel.x.row(static_cast<Eigen::Index>(treated)).head(rows).transpose();
  return {std::move(donors), std::move(target)};
}

FitResult fit_weights(const Panel& panel, const SolverConfig& config) {
  auto [donors, target] = pre_period_design(panel, panel.pre_periods());
  return fit_simplex_least_squares(donors, target, config);
}

}  // namespace scbal
