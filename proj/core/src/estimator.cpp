#include "scbal/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "scbal/solver.hpp"

namespace scbal {

namespace {

std::string hull_message(double treated_mu, double lo, double hi) {
  std::ostringstream os;
  os.precision(17);
  os << "infeasible: treated mu = " << treated_mu
     << " lies outside the donor hull [" << lo << ", " << hi << "]";
  return os.str();
}

// Uniform weights over the donors whose value equals `target`.
std::vector<double> uniform_over_matches(std::span<const double> donors, double target) {
  std::vector<double> beta(donors.size(), 0.0);
  const auto count = static_cast<double>(std::count(donors.begin(), donors.end(), target));
  for (std::size_t i = 0; i < donors.size(); ++i) {
    if (donors[i] == target) beta[i] = 1.0 / count;
  }
  return beta;
}

struct DualPoint {
  std::vector<double> beta;
  double attained = 0.0;  // sum_i beta_i d_i
};

class MinNormDual {
 public:
  explicit MinNormDual(std::span<const double> donors) : donors_(donors) {}

  // Projection of b * d onto the simplex; its d-weighted mean is monotone in b.
  DualPoint at(double b) {
    scaled_.resize(donors_.size());
    for (std::size_t i = 0; i < donors_.size(); ++i) scaled_[i] = b * donors_[i];
    DualPoint p;
    project_to_simplex_into(scaled_, p.beta, scratch_);
    for (std::size_t i = 0; i < donors_.size(); ++i) p.attained += p.beta[i] * donors_[i];
    return p;
  }

 private:
  std::span<const double> donors_;
  std::vector<double> scaled_;
  std::vector<double> scratch_;
};

// Exact min-norm solution beta_i = a + b d_i on the support of `guess`, if the
// resulting point satisfies the KKT sign conditions.
bool solve_on_support(std::span<const double> donors, double target,
                      const std::vector<double>& guess, std::vector<double>& out) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < donors.size(); ++i) {
    if (guess[i] <= 0.0) continue;
    s0 += 1.0;
    s1 += donors[i];
    s2 += donors[i] * donors[i];
  }
  const double det = s0 * s2 - s1 * s1;
  if (!(std::abs(det) > 1e-14 * std::max(1.0, s0 * s2))) return false;
  const double a = (s2 - s1 * target) / det;
  const double b = (s0 * target - s1) / det;

  const double slack = 1e-13;
  out.assign(donors.size(), 0.0);
  for (std::size_t i = 0; i < donors.size(); ++i) {
    const double value = a + b * donors[i];
    if (guess[i] > 0.0) {
      if (value < -slack) return false;
      out[i] = std::max(value, 0.0);
    } else if (value > slack) {
      return false;
    }
  }
  return true;
}

double weighted_sum(std::span<const double> beta, std::span<const double> d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s += beta[i] * d[i];
  return s;
}

}  // namespace

FeasibilityError::FeasibilityError(double treated_mu, double donor_min, double donor_max)
    : ValidationError(hull_message(treated_mu, donor_min, donor_max)),
      treated_mu_(treated_mu),
      donor_min_(donor_min),
      donor_max_(donor_max) {}

double EffectSeries::average() const {
  if (alpha_hat.empty()) return 0.0;
  return std::accumulate(alpha_hat.begin(), alpha_hat.end(), 0.0) /
         static_cast<double>(alpha_hat.size());
}

std::vector<double> donor_values(std::span<const double> per_unit, std::size_t treated_index) {
  if (treated_index >= per_unit.size()) {
    throw ValidationError("treated index " + std::to_string(treated_index) +
                          " out of range for " + std::to_string(per_unit.size()) + " units");
  }
  std::vector<double> out;
  out.reserve(per_unit.size() - 1);
  for (std::size_t i = 0; i < per_unit.size(); ++i) {
    if (i != treated_index) out.push_back(per_unit[i]);
  }
  return out;
}

SimplexWeights oracle_weights(std::span<const double> mu, std::size_t treated_index) {
  if (mu.size() < 2) throw ValidationError("oracle_weights needs at least one donor");
  const std::vector<double> donors = donor_values(mu, treated_index);
  const auto [lo_it, hi_it] = std::minmax_element(donors.begin(), donors.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  double target = mu[treated_index];

  const double scale = 1.0 + std::max({std::abs(lo), std::abs(hi), std::abs(target)});
  const double slack = 1e-12 * scale;
  if (!(target >= lo - slack && target <= hi + slack)) {
    throw FeasibilityError(target, lo, hi);
  }
  target = std::clamp(target, lo, hi);

  if (lo == hi) {
    return SimplexWeights::make(std::vector<double>(donors.size(),
                                                    1.0 / static_cast<double>(donors.size())));
  }
  if (target == lo) return SimplexWeights::make(uniform_over_matches(donors, lo));
  if (target == hi) return SimplexWeights::make(uniform_over_matches(donors, hi));

  // Bracket the dual variable, then bisect.
  MinNormDual dual(donors);
  double b_lo = -1.0;
  double b_hi = 1.0;
  for (int i = 0; i < 1000 && dual.at(b_hi).attained < target; ++i) b_hi *= 2.0;
  for (int i = 0; i < 1000 && dual.at(b_lo).attained > target; ++i) b_lo *= 2.0;

  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (b_lo + b_hi);
    if (mid <= b_lo || mid >= b_hi) break;
    if (dual.at(mid).attained < target) {
      b_lo = mid;
    } else {
      b_hi = mid;
    }
  }

  // Bisection pins down the active set; the equality system on that set gives
  // the exact point.
  std::vector<double> exact;
  for (double b : {0.5 * (b_lo + b_hi), b_lo, b_hi}) {
    const DualPoint p = dual.at(b);
    if (solve_on_support(donors, target, p.beta, exact)) {
      return SimplexWeights::make(std::move(exact));
    }
  }
  DualPoint fallback = dual.at(0.5 * (b_lo + b_hi));
  if (std::abs(weighted_sum(fallback.beta, donors) - target) > 1e-10 * scale) {
    throw ValidationError("oracle_weights: dual bisection failed to reach the treated mu");
  }
  return SimplexWeights::make(std::move(fallback.beta));
}

FeasibilityReport check_feasibility(const Panel& panel, const SimplexWeights& weights) {
  require_valid(panel);
  if (weights.size() + 1 != panel.units()) {
    throw ValidationError("weights have " + std::to_string(weights.size()) +
                          " entries but the panel has " + std::to_string(panel.units() - 1) +
                          " donors");
  }
  const std::size_t treated = panel.treated_index();
  FeasibilityReport report;
  report.residuals.resize(panel.pre_periods());
  for (std::size_t t = 0; t < panel.pre_periods(); ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    double synthetic = 0.0;
    std::size_t d = 0;
    for (std::size_t i = 0; i < panel.units(); ++i) {
      if (i == treated) continue;
      synthetic += weights[d++] * panel.x(static_cast<Eigen::Index>(i), col);
    }
    report.residuals[t] = panel.x(static_cast<Eigen::Index>(treated), col) - synthetic;
  }
  double sum = 0.0;
  for (double r : report.residuals) {
    sum += r;
    report.max_abs = std::max(report.max_abs, std::abs(r));
  }
  report.mean = sum / static_cast<double>(report.residuals.size());
  return report;
}

EffectSeries estimate_effect(const Panel& panel, const SimplexWeights& weights,
                             WeightSource source) {
  require_valid(panel);
  if (weights.size() + 1 != panel.units()) {
    throw ValidationError("shape mismatch: " + std::to_string(weights.size()) +
                          " weights for " + std::to_string(panel.units() - 1) + " donors");
  }
  const std::size_t treated = panel.treated_index();
  EffectSeries out{{}, weights, source};
  out.alpha_hat.resize(panel.post_periods());
  for (std::size_t t = 0; t < panel.post_periods(); ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    double synthetic = 0.0;
    std::size_t d = 0;
    for (std::size_t i = 0; i < panel.units(); ++i) {
      if (i == treated) continue;
      synthetic += weights[d++] * panel.y(static_cast<Eigen::Index>(i), col);
    }
    out.alpha_hat[t] = panel.y(static_cast<Eigen::Index>(treated), col) - synthetic;
  }
  return out;
}

EffectSeries naive_difference(const Panel& panel) {
  require_valid(panel);
  const std::size_t treated = panel.treated_index();
  const std::size_t donors = panel.units() - 1;
  EffectSeries out{{},
                   SimplexWeights::make(
                       std::vector<double>(donors, 1.0 / static_cast<double>(donors))),
                   WeightSource::Fitted};
  out.alpha_hat.resize(panel.post_periods());
  for (std::size_t t = 0; t < panel.post_periods(); ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    double donor_sum = 0.0;
    for (std::size_t i = 0; i < panel.units(); ++i) {
      if (i != treated) donor_sum += panel.y(static_cast<Eigen::Index>(i), col);
    }
    out.alpha_hat[t] = panel.y(static_cast<Eigen::Index>(treated), col) -
                       donor_sum / static_cast<double>(donors);
  }
  return out;
}

}  // namespace scbal
