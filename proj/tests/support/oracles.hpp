#pragma once

// Reference computations used by the tests. None of them share code with the
// library: they are brute-force or closed-form checks that are slow but easy
// to trust.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace scbal::testing {

struct GridMinimum {
  std::vector<double> point;
  double value = std::numeric_limits<double>::infinity();
};

/// Exact minimum of f(b) = b'Gb - 2 c'b + offset over the simplex grid with
/// spacing 1/resolution, for G positive semidefinite and at most 4
/// coordinates. The first k-2 coordinates are enumerated; along the remaining
/// edge f is a convex quadratic in one integer variable, so its grid minimum
/// is at an endpoint or next to the continuous minimizer.
inline GridMinimum grid_minimize(const Eigen::MatrixXd& g_in, const Eigen::VectorXd& c_in,
                                 double offset, int resolution = 1000) {
  constexpr int kMax = 4;
  const auto k = static_cast<int>(c_in.size());
  if (k < 1 || k > kMax) throw std::invalid_argument("grid_minimize supports 1..4 coordinates");
  double g[kMax][kMax] = {};
  double c[kMax] = {};
  for (int i = 0; i < k; ++i) {
    c[i] = c_in[i];
    for (int j = 0; j < k; ++j) g[i][j] = g_in(i, j);
  }
  const double h = 1.0 / resolution;
  auto value = [&](const double* x) {
    double v = offset;
    for (int i = 0; i < k; ++i) {
      double gx = 0.0;
      for (int j = 0; j < k; ++j) gx += g[i][j] * x[j];
      v += x[i] * gx - 2.0 * c[i] * x[i];
    }
    return v;
  };
  GridMinimum best;
  auto consider = [&](const double* x) {
    const double v = value(x);
    if (v < best.value) {
      best.value = v;
      best.point.assign(x, x + k);
    }
  };

  if (k == 1) {
    const double x[1] = {1.0};
    consider(x);
    return best;
  }

  const int a = k - 2;
  const int z = k - 1;
  int units[kMax] = {};
  double x[kMax] = {};
  // Along x(j) = base + j*h*(e_a - e_z) the quadratic has fixed curvature.
  const double curvature = h * h * (g[a][a] - 2.0 * g[a][z] + g[z][z]);
  auto edge = [&](int remaining) {
    for (int i = 0; i < a; ++i) x[i] = units[i] * h;
    x[a] = 0.0;
    x[z] = remaining * h;
    double slope = 0.0;
    for (int j = 0; j < k; ++j) slope += (g[a][j] - g[z][j]) * x[j];
    slope = 2.0 * h * (slope - c[a] + c[z]);
    int candidates[4] = {0, remaining, 0, remaining};
    if (curvature > 0.0) {
      const double j = -slope / (2.0 * curvature);
      if (std::isfinite(j)) {
        const int lo = static_cast<int>(std::floor(std::clamp(j, 0.0, double(remaining))));
        candidates[2] = lo;
        candidates[3] = std::min(lo + 1, remaining);
      }
    }
    for (int j : candidates) {
      x[a] = j * h;
      x[z] = (remaining - j) * h;
      consider(x);
    }
  };
  auto recurse = [&](auto&& self, int depth, int remaining) -> void {
    if (depth == a) {
      edge(remaining);
      return;
    }
    for (int u = 0; u <= remaining; ++u) {
      units[depth] = u;
      self(self, depth + 1, remaining - u);
    }
  };
  recurse(recurse, 0, resolution);
  return best;
}

/// Grid minimum of ||target - donors * b||^2.
inline GridMinimum grid_least_squares(const Eigen::MatrixXd& donors, const Eigen::VectorXd& target,
                                      int resolution = 1000) {
  return grid_minimize(donors.transpose() * donors, donors.transpose() * target,
                       target.squaredNorm(), resolution);
}

/// Grid minimum of ||x - v||^2 over the simplex.
inline GridMinimum grid_projection(const Eigen::VectorXd& v, int resolution = 1000) {
  const auto k = v.size();
  return grid_minimize(Eigen::MatrixXd::Identity(k, k), v, v.squaredNorm(), resolution);
}

/// Minimum-norm b >= 0 with sum(b) = 1 and mu'b = m, by enumerating supports
/// and solving the equality-constrained problem on each in closed form.
/// Returns nothing when no support is feasible. Practical for up to ~12 donors.
inline std::optional<std::vector<double>> min_norm_weights(const std::vector<double>& mu, double m,
                                                           double tol = 1e-12) {
  const std::size_t k = mu.size();
  std::optional<std::vector<double>> best;
  double best_norm = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < k; ++i) {
      if (mask & (std::size_t{1} << i)) s.push_back(i);
    }
    // b_i = a + c*mu_i on the support; two linear conditions fix (a, c).
    double s0 = static_cast<double>(s.size()), s1 = 0.0, s2 = 0.0;
    for (std::size_t i : s) {
      s1 += mu[i];
      s2 += mu[i] * mu[i];
    }
    const double det = s0 * s2 - s1 * s1;
    double a = 0.0, c = 0.0;
    if (std::abs(det) <= 1e-14 * std::max(1.0, s0 * s2)) {
      // Equal values on the support: uniform weights if they hit m.
      if (std::abs(s1 / s0 - m) > tol * std::max(1.0, std::abs(m))) continue;
      a = 1.0 / s0;
    } else {
      a = (s2 - s1 * m) / det;
      c = (s0 * m - s1) / det;
    }
    std::vector<double> b(k, 0.0);
    bool ok = true;
    double norm = 0.0;
    for (std::size_t i : s) {
      b[i] = a + c * mu[i];
      if (b[i] < -tol) ok = false;
      norm += b[i] * b[i];
    }
    if (!ok) continue;
    if (norm < best_norm - 1e-15) {
      best_norm = norm;
      for (double& x : b) x = std::max(x, 0.0);
      best = b;
    }
  }
  return best;
}

/// Symmetric Dirichlet(1) draw, i.e. uniform on the simplex.
inline std::vector<double> uniform_simplex(std::size_t k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> out(k);
  double sum = 0.0;
  for (double& x : out) sum += (x = e(rng));
  for (double& x : out) x /= sum;
  return out;
}

}  // namespace scbal::testing
