#include "scbal/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "scbal/estimator.hpp"

namespace scbal {

namespace {

// First-occurring minimizer and maximizer.
std::pair<std::size_t, std::size_t> hull_extremes(std::span<const double> mu) {
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (std::size_t i = 1; i < mu.size(); ++i) {
    if (mu[i] < mu[lo]) lo = i;
    if (mu[i] > mu[hi]) hi = i;
  }
  return {lo, hi};
}

}  // namespace

const char* to_string(DgpMode mode) {
  return mode == DgpMode::DesignatedTreated ? "designated" : "confounded";
}

void require_valid(const FactorModelParams& params) {
  const auto report = validate_params(params);
  if (report.empty()) return;
  std::string message = "invalid model parameters:";
  for (const auto& r : report) message += "\n  - " + r;
  throw ValidationError(message);
}

PlantedOracle plant_oracle(std::span<const double> donor_mu, const SimplexWeights& beta) {
  if (donor_mu.size() < 2) throw ValidationError("plant_oracle needs n >= 3 (two donors)");
  if (beta.size() != donor_mu.size()) {
    throw ValidationError("plant_oracle: " + std::to_string(beta.size()) + " weights for " +
                          std::to_string(donor_mu.size()) + " donors");
  }
  PlantedOracle out{{}, beta, false};
  out.mu.reserve(donor_mu.size() + 1);
  out.mu.push_back(beta.dot(donor_mu));
  out.mu.insert(out.mu.end(), donor_mu.begin(), donor_mu.end());
  const auto [lo, hi] = std::minmax_element(donor_mu.begin(), donor_mu.end());
  out.degenerate_donors = *lo == *hi;
  return out;
}

PlantedOracle plant_oracle(std::span<const double> donor_mu, double concentration,
                           RngSeed seed) {
  if (donor_mu.size() < 2) throw ValidationError("plant_oracle needs n >= 3 (two donors)");
  if (!(concentration > 0.0) || !std::isfinite(concentration)) {
    throw ValidationError("plant_oracle: Dirichlet concentration must be positive");
  }
  Engine engine = make_engine(seed);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> draws(donor_mu.size());
  double total = 0.0;
  // Gamma draws can underflow to zero for tiny concentrations; redraw then.
  while (!(total > 0.0)) {
    total = 0.0;
    for (double& g : draws) {
      g = gamma(engine);
      total += g;
    }
  }
  for (double& g : draws) g /= total;
  return plant_oracle(donor_mu, SimplexWeights::make(std::move(draws)));
}

std::vector<double> assignment_probabilities(std::span<const double> mu, double gamma) {
  if (mu.size() < 3) {
    throw ValidationError("confounded assignment needs at least 3 units, got " +
                          std::to_string(mu.size()));
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("assignment sharpness gamma must be finite and nonnegative");
  }
  const auto [lo, hi] = hull_extremes(mu);
  auto eligible = [&, lo = lo, hi = hi](std::size_t i) { return i != lo && i != hi; };

  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (eligible(i)) peak = std::max(peak, gamma * mu[i]);
  }
  std::vector<double> p(mu.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!eligible(i)) continue;
    p[i] = std::exp(gamma * mu[i] - peak);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

std::vector<int> sample_assignment(std::span<const double> mu, double gamma, DgpMode mode,
                                   Engine& engine, std::size_t designated) {
  if (mu.empty()) throw ValidationError("sample_assignment: mu is empty");
  std::vector<int> z(mu.size(), 0);
  if (mode == DgpMode::DesignatedTreated) {
    if (designated >= mu.size()) {
      throw ValidationError("designated treated index out of range");
    }
    z[designated] = 1;
    return z;
  }

  const std::vector<double> p = assignment_probabilities(mu, gamma);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(engine);
  double cumulative = 0.0;
  std::size_t chosen = mu.size();
  std::size_t last_eligible = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    last_eligible = i;
    cumulative += p[i];
    if (u < cumulative) {
      chosen = i;
      break;
    }
  }
  // u can exceed the rounded cumulative total by an ulp.
  if (chosen == mu.size()) chosen = last_eligible;
  z[chosen] = 1;
  return z;
}

std::vector<int> sample_assignment(std::span<const double> mu, double gamma, DgpMode mode,
                                   RngSeed seed, std::size_t designated) {
  Engine engine = make_engine(seed);
  return sample_assignment(mu, gamma, mode, engine, designated);
}

SimulatedPanel simulate_panel(const FactorModelParams& params, DgpMode mode, Engine& engine) {
  require_valid(params);
  const std::size_t n = params.n;
  const std::vector<int> z = sample_assignment(params.mu, params.gamma, mode, engine, 0);
  const auto treated = static_cast<std::size_t>(
      std::distance(z.begin(), std::find(z.begin(), z.end(), 1)));

  std::vector<std::size_t> order;
  order.reserve(n);
  order.push_back(treated);
  for (std::size_t i = 0; i < n; ++i) {
    if (i != treated) order.push_back(i);
  }
  std::vector<double> mu(n);
  for (std::size_t k = 0; k < n; ++k) mu[k] = params.mu[order[k]];

  SimplexWeights oracle = oracle_weights(mu, 0);

  // Noise is drawn in original unit order so a unit's draws do not depend on
  // which unit ends up treated.
  const std::size_t periods = params.periods();
  Matrix noise(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(periods));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < noise.rows(); ++i) {
    for (Eigen::Index t = 0; t < noise.cols(); ++t) {
      noise(i, t) = params.sigma(i, t) * normal(engine);
    }
  }

  const auto pre = static_cast<Eigen::Index>(params.pre_periods());
  const auto post = static_cast<Eigen::Index>(params.post_periods());
  Panel panel;
  panel.x.resize(static_cast<Eigen::Index>(n), pre);
  panel.y.resize(static_cast<Eigen::Index>(n), post);
  panel.z.assign(n, 0);
  panel.z[0] = 1;
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    const auto src = static_cast<Eigen::Index>(order[k]);
    for (Eigen::Index t = 0; t < pre; ++t) {
      const auto s = static_cast<std::size_t>(t);
      panel.x(row, t) = params.delta[s] + params.lambda[s] * mu[k] + noise(src, t);
    }
    for (Eigen::Index j = 0; j < post; ++j) {
      const auto s = static_cast<std::size_t>(pre + j);
      const double effect = k == 0 ? params.alpha[static_cast<std::size_t>(j)] : 0.0;
      panel.y(row, j) = params.delta[s] + params.lambda[s] * mu[k] + effect + noise(src, pre + j);
    }
  }

  return SimulatedPanel{std::move(panel), std::move(oracle), treated, std::move(order),
                        std::move(mu), params.alpha};
}

SimulatedPanel simulate_panel(const FactorModelParams& params, DgpMode mode, RngSeed seed) {
  Engine engine = make_engine(seed);
  return simulate_panel(params, mode, engine);
}

}  // namespace scbal
