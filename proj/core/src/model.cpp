#include "scbal/model.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace scbal {

namespace {

std::string length_message(const char* name, std::size_t got, std::size_t want,
                           const char* rule) {
  std::ostringstream os;
  os << name << " has length " << got << ", expected " << want << " (" << rule
     << ")";
  return os.str();
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

std::vector<std::string> validate_params(const FactorModelParams& p) {
  std::vector<std::string> report;
  if (p.n < 3) {
    report.push_back("n = " + std::to_string(p.n) + " must be at least 3");
  }
  if (p.t0 < 1) {
    report.push_back("t0 = " + std::to_string(p.t0) + " must be at least 1");
  }
  if (p.t_max <= p.t0) {
    report.push_back("t_max = " + std::to_string(p.t_max) +
                     " must exceed t0 = " + std::to_string(p.t0));
  }
  const std::size_t periods = p.periods();
  if (p.delta.size() != periods) {
    report.push_back(length_message("delta", p.delta.size(), periods, "t_max + 1"));
  }
  if (p.lambda.size() != periods) {
    report.push_back(length_message("lambda", p.lambda.size(), periods, "t_max + 1"));
  }
  if (p.mu.size() != p.n) {
    report.push_back(length_message("mu", p.mu.size(), p.n, "n"));
  }
  if (p.alpha.size() != p.post_periods()) {
    report.push_back(
        length_message("alpha", p.alpha.size(), p.post_periods(), "t_max - t0"));
  }
  if (static_cast<std::size_t>(p.sigma.rows()) != p.n ||
      static_cast<std::size_t>(p.sigma.cols()) != periods) {
    std::ostringstream os;
    os << "sigma has shape " << p.sigma.rows() << "x" << p.sigma.cols()
       << ", expected " << p.n << "x" << periods << " (n x (t_max + 1))";
    report.push_back(os.str());
  }
  if (p.sigma.size() > 0) {
    const double smallest = p.sigma.minCoeff();
    if (smallest < 0.0) {
      std::ostringstream os;
      os << "sigma must be nonnegative; smallest entry is " << smallest;
      report.push_back(os.str());
    }
    if (!p.sigma.allFinite()) report.push_back("sigma contains non-finite entries");
  }
  if (!all_finite(p.delta) || !all_finite(p.lambda) || !all_finite(p.mu) ||
      !all_finite(p.alpha)) {
    report.push_back("delta, lambda, mu and alpha must be finite");
  }
  if (!std::isfinite(p.gamma) || p.gamma < 0.0) {
    std::ostringstream os;
    os << "gamma = " << p.gamma << " must be finite and nonnegative";
    report.push_back(os.str());
  }
  return report;
}

std::size_t Panel::treated_index() const {
  std::size_t found = z.size();
  std::size_t count = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == 1) {
      found = i;
      ++count;
    }
  }
  if (count != 1) {
    throw ValidationError("panel must have exactly one treated unit, found " +
                          std::to_string(count));
  }
  return found;
}

std::vector<std::string> validate_panel(const Panel& panel) {
  std::vector<std::string> report;
  const auto n = static_cast<std::size_t>(panel.x.rows());
  if (static_cast<std::size_t>(panel.y.rows()) != n) {
    report.push_back("x has " + std::to_string(n) + " rows but y has " +
                     std::to_string(panel.y.rows()));
  }
  if (panel.z.size() != n) {
    report.push_back("z has length " + std::to_string(panel.z.size()) +
                     ", expected " + std::to_string(n));
  }
  if (panel.x.cols() < 1) report.push_back("panel has no pre-treatment periods");
  if (panel.y.cols() < 1) report.push_back("panel has no post-treatment periods");
  if (n < 2) report.push_back("panel needs at least one donor unit");
  std::size_t treated = 0;
  for (int zi : panel.z) {
    if (zi != 0 && zi != 1) {
      report.push_back("z entries must be 0 or 1, found " + std::to_string(zi));
      break;
    }
    treated += static_cast<std::size_t>(zi == 1);
  }
  if (treated != 1) {
    report.push_back("exactly one unit must be treated, found " + std::to_string(treated));
  }
  return report;
}

void require_valid(const Panel& panel) {
  const auto report = validate_panel(panel);
  if (report.empty()) return;
  std::string message = "invalid panel:";
  for (const auto& r : report) message += "\n  - " + r;
  throw ValidationError(message);
}

std::string SimplexViolation::describe() const {
  std::ostringstream os;
  switch (constraint) {
    case SimplexConstraint::LowerBound:
      os << "beta[" << index << "] below 0 by " << magnitude;
      break;
    case SimplexConstraint::UpperBound:
      os << "beta[" << index << "] above 1 by " << magnitude;
      break;
    case SimplexConstraint::Sum:
      os << "weights sum differs from 1 by " << magnitude;
      break;
  }
  return os.str();
}

SimplexCheck check_simplex(std::vector<double> w, double tol) {
  if (w.empty()) throw ValidationError("check_simplex: weight sequence is empty");
  if (!(tol >= 0.0)) throw ValidationError("check_simplex: tolerance must be nonnegative");

  SimplexCheck result;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i])) {
      result.violations.push_back(
          {SimplexConstraint::LowerBound, i, std::numeric_limits<double>::infinity()});
      continue;
    }
    if (w[i] < -tol) {
      result.violations.push_back({SimplexConstraint::LowerBound, i, -w[i]});
    }
    if (w[i] > 1.0 + tol) {
      result.violations.push_back({SimplexConstraint::UpperBound, i, w[i] - 1.0});
    }
  }
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(std::abs(sum - 1.0) <= tol)) {
    result.violations.push_back({SimplexConstraint::Sum, 0, std::abs(sum - 1.0)});
  }
  if (result.violations.empty()) result.weights = SimplexWeights(std::move(w), tol);
  return result;
}

SimplexWeights SimplexWeights::make(std::vector<double> beta, double tolerance) {
  auto check = check_simplex(std::move(beta), tolerance);
  if (check.accepted()) return std::move(*check.weights);
  std::string message = "weights violate the simplex constraints:";
  for (const auto& v : check.violations) message += "\n  - " + v.describe();
  throw ValidationError(message);
}

Vector SimplexWeights::as_vector() const {
  return Eigen::Map<const Vector>(beta_.data(), static_cast<Eigen::Index>(beta_.size()));
}

double SimplexWeights::dot(std::span<const double> v) const {
  if (v.size() != beta_.size()) {
    throw ValidationError("SimplexWeights::dot: expected " + std::to_string(beta_.size()) +
                          " values, got " + std::to_string(v.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += beta_[i] * v[i];
  return s;
}

const char* to_string(BVariant v) {
  return v == BVariant::Verbatim ? "verbatim" : "corrected";
}

}  // namespace scbal
