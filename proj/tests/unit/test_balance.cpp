#include <gtest/gtest.h>

#include <cmath>

#include "scbal/balance.hpp"
#include "scbal/dgp.hpp"

namespace {

using namespace scbal;

FactorModelParams confounded_params(double gamma) {
  FactorModelParams p;
  p.n = 8;
  p.t0 = 6;
  p.t_max = 8;
  p.delta.assign(9, 0.0);
  p.lambda.assign(9, 1.0);
  p.alpha.assign(2, 1.0);
  for (std::size_t i = 0; i < p.n; ++i) p.mu.push_back(-1.0 + 2.0 * double(i) / 7.0);
  p.sigma = Matrix::Constant(8, 9, 0.2);
  p.gamma = gamma;
  return p;
}

TEST(BMatrix, VerbatimEntries) {
  const SimplexWeights beta = SimplexWeights::make({0.2, 0.3, 0.5});
  const Matrix b = build_b_matrix(beta, BVariant::Verbatim).b;
  const Matrix expected = (Matrix(4, 4) << 0, 0.2, 0.3, 0.5,   //
                           1, 0, -0.3, -0.5,                   //
                           1, -0.2, 0, -0.5,                   //
                           1, -0.2, -0.3, 0)
                              .finished();
  EXPECT_EQ(b, expected);
}

TEST(BMatrix, CorrectedDiffersOnlyOnDonorDiagonal) {
  const SimplexWeights beta = SimplexWeights::make({0.2, 0.3, 0.5});
  const Matrix v = build_b_matrix(beta, BVariant::Verbatim).b;
  const Matrix c = build_b_matrix(beta, BVariant::Corrected).b;
  Matrix diff = c - v;
  EXPECT_EQ(diff(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(diff(1, 1), 0.8);
  EXPECT_DOUBLE_EQ(diff(2, 2), 0.7);
  EXPECT_DOUBLE_EQ(diff(3, 3), 0.5);
  diff.diagonal().setZero();
  EXPECT_EQ(diff.cwiseAbs().maxCoeff(), 0.0);
}

TEST(EigenAudit, CorrectedHasMuAsUnitEigenvector) {
  const SimplexWeights beta = SimplexWeights::make({0.25, 0.25, 0.5});
  const std::vector<double> donors{-1.0, 2.0, 0.5};
  std::vector<double> mu{beta.dot(donors)};
  mu.insert(mu.end(), donors.begin(), donors.end());
  const EigenAudit c = eigen_audit(build_b_matrix(beta, BVariant::Corrected), mu);
  EXPECT_LT(c.residual_inf_norm, 1e-15);
  for (double f : c.per_row_factor) EXPECT_NEAR(f, 1.0, 1e-15);

  const EigenAudit v = eigen_audit(build_b_matrix(beta, BVariant::Verbatim), mu);
  EXPECT_LT(v.row1_residual, 1e-15);
  EXPECT_LT(v.donor_row_beta_residual, 1e-15);
  // Donor rows scale mu_i by beta_i instead of reproducing it.
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(v.per_row_factor[i], beta[i], 1e-15);
  EXPECT_NEAR(v.residual_inf_norm, (1.0 - 0.25) * 2.0, 1e-15);
}

TEST(EigenAudit, ZeroMuGivesNaNFactor) {
  const SimplexWeights beta = SimplexWeights::make({0.5, 0.5});
  const EigenAudit a = eigen_audit(build_b_matrix(beta, BVariant::Corrected),
                                   std::vector<double>{0.5, 0.0, 1.0});
  EXPECT_TRUE(std::isnan(a.per_row_factor[0]));
  EXPECT_FALSE(std::isnan(a.per_row_factor[1]));
}

TEST(EigenAudit, RejectsWrongLength) {
  const SimplexWeights beta = SimplexWeights::make({0.5, 0.5});
  EXPECT_THROW(eigen_audit(build_b_matrix(beta, BVariant::Verbatim), std::vector<double>{1, 2}),
               ValidationError);
}

TEST(ConditionalBias, NaiveBiasGrowsWithGamma) {
  double previous = -1.0;
  double previous_se = 0.0;
  for (double gamma : {0.0, 1.0, 2.0, 4.0}) {
    const BalanceDiagnostic d = conditional_bias_experiment(confounded_params(gamma), 2000, 3, 1);
    EXPECT_EQ(d.gamma, gamma);
    const double bias = std::abs(d.naive_summary.mean_bias_per_period[0]);
    const double se = d.naive_summary.se_per_period[0];
    EXPECT_GT(bias + 3.0 * std::hypot(se, previous_se), previous) << "gamma " << gamma;
    previous = bias;
    previous_se = se;
    // The oracle-weight estimator stays centred.
    const auto& sc = d.sc_summary;
    for (std::size_t k = 0; k < sc.mean_bias_per_period.size(); ++k) {
      EXPECT_LT(std::abs(sc.mean_bias_per_period[k]), 4.0 * sc.se_per_period[k]);
    }
  }
}

TEST(ConditionalBias, NeedsAtLeastOneHundredReplications) {
  EXPECT_THROW(conditional_bias_experiment(confounded_params(1.0), 99, 1), ValidationError);
}

TEST(Placebo, NoiselessPanelGivesZeroResiduals) {
  FactorModelParams p = confounded_params(0.0);
  p.sigma.setZero();
  for (std::size_t t = 0; t < 9; ++t) p.lambda[t] = 1.0 + 0.1 * double(t);
  const SimulatedPanel sim = simulate_panel(p, DgpMode::ConfoundedAssignment, RngSeed{3, 3});
  const PlaceboResult r = placebo_test(sim.panel, default_placebo_split(p.t0));
  EXPECT_EQ(r.split, 3u);
  ASSERT_EQ(r.residuals.size(), 3u);
  for (double x : r.residuals) EXPECT_LT(std::abs(x), 1e-8);
}

TEST(Placebo, SplitMustLeaveFittingAndHeldOutPeriods) {
  const SimulatedPanel sim =
      simulate_panel(confounded_params(0.0), DgpMode::ConfoundedAssignment, RngSeed{1, 1});
  EXPECT_THROW(placebo_test(sim.panel, 0), ValidationError);
  EXPECT_THROW(placebo_test(sim.panel, 6), ValidationError);
  EXPECT_NO_THROW(placebo_test(sim.panel, 5));
  EXPECT_EQ(default_placebo_split(7), 3u);
}

TEST(Placebo, ResidualsUseTheGivenWeights) {
  Panel panel{Matrix(3, 4), Matrix::Zero(3, 1), {1, 0, 0}};
  panel.x << 1, 2, 3, 4,  //
      0, 0, 0, 0,         //
      2, 2, 2, 2;
  const auto r = placebo_residuals(panel, SimplexWeights::make({0.5, 0.5}), 1);
  EXPECT_EQ(r, (std::vector<double>{2.0, 3.0}));
}

}  // namespace
