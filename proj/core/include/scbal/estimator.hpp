#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scbal/model.hpp"

namespace scbal {

/// Raised when the treated unit's factor lies outside the donors' hull, i.e.
/// no simplex weights reproduce it.
class FeasibilityError : public ValidationError {
 public:
  FeasibilityError(double treated_mu, double donor_min, double donor_max);

  double treated_mu() const { return treated_mu_; }
  double donor_min() const { return donor_min_; }
  double donor_max() const { return donor_max_; }

 private:
  double treated_mu_;
  double donor_min_;
  double donor_max_;
};

enum class WeightSource { Oracle, Fitted };

struct EffectSeries {
  std::vector<double> alpha_hat;  // one entry per post-period t0+1..t_max
  SimplexWeights weights_used;
  WeightSource weight_source = WeightSource::Fitted;

  /// Post-period average of alpha_hat.
  double average() const;
};

/// Minimum-norm simplex weights beta with sum_i beta_i mu_i equal to the
/// treated unit's mu. Donors are the remaining units in their original order.
/// Throws FeasibilityError when the treated mu lies outside [min, max] of the
/// donor values.
SimplexWeights oracle_weights(std::span<const double> mu, std::size_t treated_index);

struct FeasibilityReport {
  std::vector<double> residuals;  // X_{1,t} - sum_i beta_i X_{i,t}, t = 0..t0
  double mean = 0.0;
  double max_abs = 0.0;
};

FeasibilityReport check_feasibility(const Panel& panel, const SimplexWeights& weights);

/// alpha_hat_t = Y_{1,t} - sum_i beta_i Y_{i,t} for every post-period.
EffectSeries estimate_effect(const Panel& panel, const SimplexWeights& weights,
                             WeightSource source = WeightSource::Fitted);

/// Treated outcome minus the donor average; the unadjusted baseline.
EffectSeries naive_difference(const Panel& panel);

/// Donor values of a per-unit sequence with the treated entry removed.
std::vector<double> donor_values(std::span<const double> per_unit, std::size_t treated_index);

}  // namespace scbal
