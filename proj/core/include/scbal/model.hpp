#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scbal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Absolute tolerance used for simplex membership checks unless a caller
/// supplies its own.
inline constexpr double kSimplexTolerance = 1e-9;

/// Raised when inputs violate a documented precondition. The CLI maps it to
/// exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on file system and parse failures of external documents. The CLI
/// maps it to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Primitives of the scalar factor model
///
///   X_{i,t} = delta_t + lambda_t mu_i + eps_{i,t}                 (t <= t0)
///   Y_{i,t} = delta_t + lambda_t mu_i + Z_i alpha_{i,t} + eps_{i,t} (t > t0)
///
/// Time runs over 0..t_max. Unit 0 is the designated treated unit when the
/// panel is simulated in DesignatedTreated mode; `alpha` only applies to the
/// realized treated unit.
struct FactorModelParams {
  std::size_t n = 0;
  std::size_t t0 = 0;
  std::size_t t_max = 0;
  std::vector<double> delta;   // length t_max + 1
  std::vector<double> lambda;  // length t_max + 1
  std::vector<double> mu;      // length n
  Matrix sigma;                // n x (t_max + 1), entries >= 0
  std::vector<double> alpha;   // length t_max - t0
  double gamma = 0.0;

  std::size_t periods() const { return t_max + 1; }
  std::size_t pre_periods() const { return t0 + 1; }
  std::size_t post_periods() const { return t_max > t0 ? t_max - t0 : 0; }
};

/// Returns one message per violated invariant; empty iff `p` is valid.
std::vector<std::string> validate_params(const FactorModelParams& p);

/// Observed data. Row i of `x` and `y` belongs to unit i; the treated unit is
/// always stored at row 0 by the producers in this library, but `z` is the
/// authority on which unit is treated.
struct Panel {
  Matrix x;            // n x (t0 + 1)
  Matrix y;            // n x (t_max - t0)
  std::vector<int> z;  // length n, exactly one entry equal to 1

  std::size_t units() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t pre_periods() const { return static_cast<std::size_t>(x.cols()); }
  std::size_t post_periods() const { return static_cast<std::size_t>(y.cols()); }
  std::size_t t0() const { return pre_periods() - 1; }
  std::size_t t_max() const { return t0() + post_periods(); }

  /// Index of the unique treated unit. Throws ValidationError if `z` is not
  /// a valid assignment.
  std::size_t treated_index() const;
};

std::vector<std::string> validate_panel(const Panel& panel);

/// Throws ValidationError listing every violation when the panel is invalid.
void require_valid(const Panel& panel);

enum class SimplexConstraint { LowerBound, UpperBound, Sum };

struct SimplexViolation {
  SimplexConstraint constraint;
  std::size_t index = 0;  // offending coordinate; 0 for Sum
  double magnitude = 0.0; // distance outside the feasible range

  std::string describe() const;
};

struct SimplexCheck;

/// Donor weights beta_2..beta_n stored at positions 0..n-2. Instances can
/// only be obtained through check_simplex or SimplexWeights::make, so every
/// live object satisfies the bound and sum constraints within `tolerance()`.
class SimplexWeights {
 public:
  /// Throws ValidationError describing each violation.
  static SimplexWeights make(std::vector<double> beta,
                             double tolerance = kSimplexTolerance);

  std::span<const double> values() const { return beta_; }
  std::size_t size() const { return beta_.size(); }
  double operator[](std::size_t i) const { return beta_[i]; }
  double tolerance() const { return tolerance_; }
  Vector as_vector() const;

  /// Sum of beta_i * v_i over donors.
  double dot(std::span<const double> v) const;

  friend bool operator==(const SimplexWeights&, const SimplexWeights&) = default;

 private:
  SimplexWeights(std::vector<double> beta, double tolerance)
      : beta_(std::move(beta)), tolerance_(tolerance) {}

  friend SimplexCheck check_simplex(std::vector<double>, double);

  std::vector<double> beta_;
  double tolerance_ = kSimplexTolerance;
};

struct SimplexCheck {
  std::optional<SimplexWeights> weights;
  std::vector<SimplexViolation> violations;

  bool accepted() const { return weights.has_value(); }
};

/// Accepts iff every entry lies in [0, 1] and the entries sum to 1, each
/// within `tol`. Throws ValidationError on an empty sequence or a negative
/// tolerance.
SimplexCheck check_simplex(std::vector<double> w, double tol = kSimplexTolerance);

enum class BVariant { Verbatim, Corrected };

const char* to_string(BVariant v);

/// The n x n matrix B = g(beta).
struct BalanceMatrix {
  Matrix b;
  BVariant variant = BVariant::Verbatim;
};

/// Per-period replication statistics of the estimation error alpha_hat - alpha.
struct McSummary {
  std::size_t replications = 0;
  std::vector<double> mean_bias_per_period;
  std::vector<double> se_per_period;  // NaN when replications < 2
  std::vector<double> rmse_per_period;

  bool se_defined() const { return replications >= 2; }
};

}  // namespace scbal
