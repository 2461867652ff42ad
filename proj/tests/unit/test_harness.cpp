#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "scbal/harness.hpp"
#include "scbal/json_io.hpp"

namespace {

using namespace scbal;

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  FactorModelParams& p = spec.params;
  p.n = 6;
  p.t0 = 10;
  p.t_max = 13;
  p.delta.assign(14, 0.5);
  p.lambda.assign(14, 1.0);
  p.alpha = {1.0, 0.5, 0.0};
  p.mu = {-1.0, -0.6, -0.1, 0.3, 0.7, 1.0};
  p.sigma = Matrix::Constant(6, 14, 0.3);
  p.gamma = 1.0;
  spec.reps = 300;
  spec.master_seed = 42;
  spec.workers = 1;
  return spec;
}

std::filesystem::path temp_file(const std::string& name) {
  auto path = std::filesystem::temp_directory_path() / ("scbal_test_" + name);
  std::filesystem::remove(path);
  return path;
}

TEST(EstimatorKind, NamesRoundTrip) {
  for (auto kind : {EstimatorKind::OracleSC, EstimatorKind::FittedSC, EstimatorKind::Naive}) {
    EXPECT_EQ(parse_estimator(to_string(kind)), kind);
  }
  EXPECT_FALSE(parse_estimator("lasso").has_value());
}

TEST(Accumulator, MatchesTwoPassSummary) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(3.0, 2.0);
  const std::vector<double> truth{1.0, -1.0};
  Matrix effects(500, 2);
  ErrorAccumulator acc(2);
  for (Eigen::Index r = 0; r < effects.rows(); ++r) {
    effects(r, 0) = normal(rng);
    effects(r, 1) = normal(rng);
    acc.add(std::vector<double>{effects(r, 0), effects(r, 1)}, truth);
  }
  // Plain two-pass statistics as the reference.
  for (Eigen::Index c = 0; c < 2; ++c) {
    const Vector err = effects.col(c).array() - truth[std::size_t(c)];
    const double mean = err.mean();
    const double var = (err.array() - mean).square().sum() / (err.size() - 1);
    const double rmse = std::sqrt(err.squaredNorm() / err.size());
    const McSummary s = acc.summary();
    EXPECT_NEAR(s.mean_bias_per_period[std::size_t(c)], mean, 1e-12);
    EXPECT_NEAR(s.se_per_period[std::size_t(c)], std::sqrt(var / err.size()), 1e-12);
    EXPECT_NEAR(s.rmse_per_period[std::size_t(c)], rmse, 1e-12);
    EXPECT_NEAR(summarize(effects, truth).se_per_period[std::size_t(c)], std::sqrt(var / err.size()),
                1e-12);
  }
}

TEST(Accumulator, SingleReplicationHasUndefinedStandardError) {
  const McSummary s = summarize(Matrix::Constant(1, 2, 2.0), std::vector<double>{1.0, 1.0});
  EXPECT_EQ(s.replications, 1u);
  EXPECT_TRUE(std::isnan(s.se_per_period[0]));
  EXPECT_DOUBLE_EQ(s.mean_bias_per_period[1], 1.0);
}

TEST(Spec, ValidationCatchesBadSettings) {
  ExperimentSpec spec = small_spec();
  EXPECT_NO_THROW(validate(spec));
  spec.reps = 0;
  EXPECT_THROW(validate(spec), ValidationError);
  spec = small_spec();
  spec.estimators = {EstimatorKind::Naive, EstimatorKind::Naive};
  EXPECT_THROW(validate(spec), ValidationError);
  spec = small_spec();
  spec.estimators.clear();
  EXPECT_THROW(validate(spec), ValidationError);
  spec = small_spec();
  spec.mode = DgpMode::DesignatedTreated;
  EXPECT_THROW(validate(spec), FeasibilityError);  // unit 0 sits below the donor hull
  spec.params.mu[0] = 0.0;
  EXPECT_NO_THROW(validate(spec));
  spec.params.mu[0] = -2.0;
  EXPECT_THROW(validate(spec), FeasibilityError);
}

TEST(Spec, TableRetentionDefaultsByReplicationCount) {
  ExperimentSpec spec = small_spec();
  EXPECT_TRUE(spec.retains_table());
  spec.reps = kMaxRetainedReplications + 1;
  EXPECT_FALSE(spec.retains_table());
  spec.retain_table = true;
  EXPECT_TRUE(spec.retains_table());
}

TEST(Workers, ZeroMeansHardwareConcurrency) {
  EXPECT_GE(resolve_workers(0), 1u);
  EXPECT_EQ(resolve_workers(3), 3u);
}

TEST(Experiment, TableAgreesWithSummaryAndReplications) {
  ExperimentSpec spec = small_spec();
  spec.estimators = {EstimatorKind::OracleSC, EstimatorKind::FittedSC, EstimatorKind::Naive};
  spec.reps = 60;
  const ExperimentResult result = run_experiment(spec);
  ASSERT_EQ(result.outcomes.size(), 3u);
  for (const auto& outcome : result.outcomes) {
    ASSERT_TRUE(outcome.table.has_value());
    EXPECT_EQ(outcome.table->rows(), 60);
    const McSummary s = summarize(*outcome.table, spec.params.alpha);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(s.mean_bias_per_period[k], outcome.summary.mean_bias_per_period[k], 1e-12);
    }
  }
  const auto row7 = run_replication(spec, 7);
  for (std::size_t e = 0; e < 3; ++e) {
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_EQ((*result.outcomes[e].table)(7, Eigen::Index(k)), row7[e][k]);
    }
  }
  EXPECT_GE(result.wall_time_s, 0.0);
}

TEST(Experiment, WorkerCountAndChunkingDoNotChangeResults) {
  ExperimentSpec spec = small_spec();
  spec.workers = 1;
  const std::string one = experiment_result_json(run_experiment(spec), false);
  spec.workers = 3;
  RunOptions chunks;
  chunks.chunk_size = 7;
  EXPECT_EQ(experiment_result_json(run_experiment(spec, chunks), false), one);
}

TEST(Experiment, ResumesFromCheckpointToTheSameResult) {
  ExperimentSpec spec = small_spec();
  const std::string expected = experiment_result_json(run_experiment(spec), false);

  const auto path = temp_file("resume.json");
  RunOptions options;
  options.chunk_size = 50;
  options.checkpoint = path;
  options.stop_after_chunks = 2;
  try {
    (void)run_experiment(spec, options);
    FAIL() << "expected interruption";
  } catch (const ExperimentInterrupted& e) {
    EXPECT_EQ(e.completed(), 100u);
  }
  ASSERT_TRUE(std::filesystem::exists(path));
  options.stop_after_chunks.reset();
  spec.workers = 2;  // workers are not part of the fingerprint
  EXPECT_EQ(experiment_result_json(run_experiment(spec, options), false), expected);
  std::filesystem::remove(path);
}

TEST(Experiment, CheckpointFromAnotherSpecIsRejected) {
  ExperimentSpec spec = small_spec();
  const auto path = temp_file("mismatch.json");
  RunOptions options;
  options.chunk_size = 50;
  options.checkpoint = path;
  options.stop_after_chunks = 1;
  EXPECT_THROW((void)run_experiment(spec, options), ExperimentInterrupted);
  spec.master_seed += 1;
  options.stop_after_chunks.reset();
  EXPECT_THROW((void)run_experiment(spec, options), ValidationError);
  std::filesystem::remove(path);
}

TEST(Experiment, DifferentSeedsGiveDifferentResults) {
  ExperimentSpec spec = small_spec();
  const auto a = run_experiment(spec);
  spec.master_seed = 43;
  const auto b = run_experiment(spec);
  EXPECT_NE(a.summary(EstimatorKind::Naive).mean_bias_per_period,
            b.summary(EstimatorKind::Naive).mean_bias_per_period);
  EXPECT_THROW((void)a.outcome(EstimatorKind::FittedSC), std::exception);
}

}  // namespace
