#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "scbal/dgp.hpp"
#include "scbal/rng.hpp"

namespace {

using namespace scbal;

FactorModelParams params(std::size_t n, double sigma) {
  FactorModelParams p;
  p.n = n;
  p.t0 = 4;
  p.t_max = 7;
  for (std::size_t t = 0; t <= p.t_max; ++t) {
    p.delta.push_back(0.1 * static_cast<double>(t));
    p.lambda.push_back(1.0 + 0.5 * std::sin(static_cast<double>(t)));
  }
  p.alpha = {1.0, 2.0, 3.0};
  for (std::size_t i = 0; i < n; ++i) {
    p.mu.push_back(-1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  p.sigma = Matrix::Constant(static_cast<Eigen::Index>(n), 8, sigma);
  p.gamma = 1.0;
  return p;
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Engine a = make_engine({7, 3});
  Engine b = make_engine({7, 3});
  EXPECT_EQ(a(), b());
  std::set<std::uint64_t> keys;
  for (std::uint64_t master : {0ULL, 1ULL, 2ULL}) {
    for (std::uint64_t rep = 0; rep < 100; ++rep) keys.insert(derive_stream_seed({master, rep}));
  }
  EXPECT_EQ(keys.size(), 300u);
  EXPECT_NE(derive_stream_seed({1, 2}), derive_stream_seed({2, 1}));
}

TEST(Rng, AvalancheIsOneSplitMixStep) {
  // First output of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(avalanche(0), 0xe220a8397b1dcdafULL);
}

TEST(PlantOracle, TreatedMuIsTheWeightedDonorMean) {
  const std::vector<double> donors{-2.0, 0.5, 3.0, 1.0};
  const PlantedOracle plant = plant_oracle(donors, 0.7, RngSeed{1, 2});
  ASSERT_EQ(plant.mu.size(), 5u);
  double expected = 0.0;
  for (std::size_t i = 0; i < donors.size(); ++i) expected += plant.beta[i] * donors[i];
  EXPECT_DOUBLE_EQ(plant.mu[0], expected);
  EXPECT_FALSE(plant.degenerate_donors);
  EXPECT_EQ(plant_oracle(donors, 0.7, RngSeed{1, 2}).beta, plant.beta);
}

TEST(PlantOracle, FlagsEqualDonorsAndRejectsBadInput) {
  const std::vector<double> same{0.5, 0.5, 0.5};
  EXPECT_TRUE(plant_oracle(same, SimplexWeights::make({0.2, 0.3, 0.5})).degenerate_donors);
  EXPECT_THROW(plant_oracle(std::vector<double>{1.0}, 1.0, RngSeed{}), ValidationError);
  EXPECT_THROW(plant_oracle(same, 0.0, RngSeed{}), ValidationError);
}

TEST(Assignment, ProbabilitiesFollowSoftmaxOverInteriorUnits) {
  const std::vector<double> mu{0.3, -1.0, 0.8, 1.0, -1.0, 0.0};
  const double gamma = 1.7;
  const auto p = assignment_probabilities(mu, gamma);
  // First minimizer (index 1) and maximizer (index 3) are excluded; the later
  // tie at index 4 stays eligible.
  EXPECT_EQ(p[1], 0.0);
  EXPECT_EQ(p[3], 0.0);
  double z = 0.0;
  for (std::size_t i : {0u, 2u, 4u, 5u}) z += std::exp(gamma * mu[i]);
  for (std::size_t i : {0u, 2u, 4u, 5u}) EXPECT_NEAR(p[i], std::exp(gamma * mu[i]) / z, 1e-15);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-15);
}

TEST(Assignment, LargeGammaDoesNotOverflow) {
  const auto p = assignment_probabilities(std::vector<double>{0.0, 500.0, 1000.0, 2000.0}, 10.0);
  EXPECT_EQ(p[0], 0.0);
  EXPECT_EQ(p[3], 0.0);
  EXPECT_NEAR(p[2], 1.0, 1e-12);
}

TEST(Assignment, RejectsFewerThanThreeUnits) {
  EXPECT_THROW(assignment_probabilities(std::vector<double>{0.0, 1.0}, 1.0), ValidationError);
}

TEST(Assignment, SampledFrequenciesMatchProbabilities) {
  const std::vector<double> mu{-1.0, -0.2, 0.1, 0.6, 1.0};
  const auto p = assignment_probabilities(mu, 2.0);
  std::vector<int> counts(mu.size(), 0);
  Engine engine = make_engine({3, 0});
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const auto z = sample_assignment(mu, 2.0, DgpMode::ConfoundedAssignment, engine);
    ASSERT_EQ(std::accumulate(z.begin(), z.end(), 0), 1);
    for (std::size_t u = 0; u < z.size(); ++u) counts[u] += z[u];
  }
  for (std::size_t u = 0; u < mu.size(); ++u) {
    const double se = std::sqrt(p[u] * (1 - p[u]) / draws);
    EXPECT_NEAR(counts[u] / double(draws), p[u], 5 * se + 1e-12) << "unit " << u;
  }
}

TEST(Assignment, DesignatedModeIsDeterministic) {
  const auto z = sample_assignment(std::vector<double>{0.0, 1.0, 2.0}, 1.0,
                                   DgpMode::DesignatedTreated, RngSeed{1, 1}, 2);
  EXPECT_EQ(z, (std::vector<int>{0, 0, 1}));
}

TEST(Simulate, NoiselessPanelMatchesTheFactorModel) {
  FactorModelParams p = params(5, 0.0);
  p.mu[0] = 0.2;
  const SimulatedPanel sim = simulate_panel(p, DgpMode::DesignatedTreated, RngSeed{9, 0});
  ASSERT_EQ(sim.treated_index, 0u);
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t t = 0; t <= p.t0; ++t) {
      EXPECT_EQ(sim.panel.x(Eigen::Index(i), Eigen::Index(t)), p.delta[t] + p.lambda[t] * p.mu[i]);
    }
    for (std::size_t j = 0; j < p.post_periods(); ++j) {
      const std::size_t t = p.t0 + 1 + j;
      const double effect = i == 0 ? p.alpha[j] : 0.0;
      EXPECT_EQ(sim.panel.y(Eigen::Index(i), Eigen::Index(j)),
                p.delta[t] + p.lambda[t] * p.mu[i] + effect);
    }
  }
  EXPECT_NEAR(sim.oracle_beta.dot(std::vector<double>(p.mu.begin() + 1, p.mu.end())), 0.2, 1e-14);
}

TEST(Simulate, TreatedUnitMovesToRowZeroAndDonorsKeepOrder) {
  const FactorModelParams p = params(6, 0.0);
  for (std::uint64_t rep = 0; rep < 30; ++rep) {
    const SimulatedPanel sim = simulate_panel(p, DgpMode::ConfoundedAssignment, RngSeed{4, rep});
    EXPECT_EQ(sim.unit_order.front(), sim.treated_index);
    EXPECT_EQ(sim.panel.z[0], 1);
    for (std::size_t k = 2; k < sim.unit_order.size(); ++k) {
      EXPECT_LT(sim.unit_order[k - 1], sim.unit_order[k]);
    }
    EXPECT_NE(sim.treated_index, 0u);  // unit 0 has the smallest mu
    EXPECT_NE(sim.treated_index, 5u);  // unit 5 has the largest
    for (std::size_t k = 0; k < p.n; ++k) EXPECT_EQ(sim.mu[k], p.mu[sim.unit_order[k]]);
  }
}

TEST(Simulate, NoiseFollowsTheOriginalUnitThroughRelabeling) {
  FactorModelParams p = params(6, 0.0);
  p.delta.assign(8, 0.0);
  p.lambda.assign(8, 0.0);
  p.alpha.assign(3, 0.0);
  p.sigma.row(3).setConstant(1.0);  // only unit 3 is noisy
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const SimulatedPanel sim = simulate_panel(p, DgpMode::ConfoundedAssignment, RngSeed{2, rep});
    for (std::size_t k = 0; k < p.n; ++k) {
      const bool noisy = sim.unit_order[k] == 3;
      EXPECT_EQ(sim.panel.x.row(Eigen::Index(k)).cwiseAbs().maxCoeff() > 0.0, noisy);
    }
  }
}

TEST(Simulate, RejectsInvalidParamsWithReport) {
  FactorModelParams p = params(5, 0.1);
  p.lambda.pop_back();
  try {
    (void)simulate_panel(p, DgpMode::DesignatedTreated, RngSeed{});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("lambda has length 7"), std::string::npos);
  }
}

TEST(Simulate, DesignatedUnitOutsideHullIsInfeasible) {
  FactorModelParams p = params(5, 0.1);
  p.mu[0] = 3.0;
  EXPECT_THROW((void)simulate_panel(p, DgpMode::DesignatedTreated, RngSeed{}), ValidationError);
}

TEST(Simulate, SameSeedSamePanel) {
  const FactorModelParams p = params(7, 0.4);
  const auto a = simulate_panel(p, DgpMode::ConfoundedAssignment, RngSeed{11, 5});
  const auto b = simulate_panel(p, DgpMode::ConfoundedAssignment, RngSeed{11, 5});
  EXPECT_EQ(a.panel.x, b.panel.x);
  EXPECT_EQ(a.panel.y, b.panel.y);
  EXPECT_EQ(a.unit_order, b.unit_order);
}

}  // namespace
