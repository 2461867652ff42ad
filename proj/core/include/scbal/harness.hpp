#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scbal/dgp.hpp"
#include "scbal/model.hpp"
#include "scbal/solver.hpp"

namespace scbal {

enum class EstimatorKind { OracleSC, FittedSC, Naive };

const char* to_string(EstimatorKind kind);
std::optional<EstimatorKind> parse_estimator(std::string_view name);

/// Above this many replications the per-replication effect table is dropped
/// unless explicitly requested.
inline constexpr std::size_t kMaxRetainedReplications = 100000;

struct ExperimentSpec {
  FactorModelParams params;
  DgpMode mode = DgpMode::ConfoundedAssignment;
  std::vector<EstimatorKind> estimators{EstimatorKind::OracleSC, EstimatorKind::Naive};
  std::size_t reps = 1000;
  std::uint64_t master_seed = 1;
  std::size_t workers = 0;  // 0 selects the hardware concurrency
  SolverConfig solver;
  std::optional<bool> retain_table;  // unset: retain iff reps <= kMaxRetainedReplications

  bool retains_table() const;
};

/// Throws ValidationError on an invalid spec.
void validate(const ExperimentSpec& spec);

std::size_t resolve_workers(std::size_t requested);

/// Streaming per-period mean and M2 of estimation errors, accumulated in the
/// order replications are added.
class ErrorAccumulator {
 public:
  explicit ErrorAccumulator(std::size_t periods = 0);

  void add(std::span<const double> estimate, std::span<const double> truth);
  McSummary summary() const;

  std::size_t count() const { return count_; }
  std::size_t periods() const { return mean_.size(); }

  // Raw state, exposed for checkpointing.
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& m2() const { return m2_; }
  static ErrorAccumulator restore(std::size_t count, std::vector<double> mean,
                                  std::vector<double> m2);

 private:
  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

/// Per-period mean bias (of alpha_hat - truth), standard error of that mean and
/// RMSE. Rows of `effects` are replications. SE is NaN for a single row.
McSummary summarize(const Matrix& effects, std::span<const double> truth);

struct EstimatorOutcome {
  EstimatorKind kind;
  McSummary summary;
  std::optional<Matrix> table;  // replications x post-periods of alpha_hat
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<EstimatorOutcome> outcomes;  // in spec.estimators order
  double wall_time_s = 0.0;

  const EstimatorOutcome& outcome(EstimatorKind kind) const;
  const McSummary& summary(EstimatorKind kind) const { return outcome(kind).summary; }
};

/// alpha_hat series of every requested estimator for replication `index`.
std::vector<std::vector<double>> run_replication(const ExperimentSpec& spec, std::size_t index);

/// A replication failed; carries its index.
class ReplicationError : public ValidationError {
 public:
  ReplicationError(std::size_t replication, const std::string& what);
  std::size_t replication() const { return replication_; }

 private:
  std::size_t replication_;
};

/// Thrown when RunOptions::stop_after_chunks is reached before completion.
/// The checkpoint (if any) holds everything accumulated so far.
class ExperimentInterrupted : public std::runtime_error {
 public:
  explicit ExperimentInterrupted(std::size_t completed);
  std::size_t completed() const { return completed_; }

 private:
  std::size_t completed_;
};

struct RunOptions {
  std::size_t chunk_size = 1024;
  /// Persist partial state after every chunk and resume from it when the file
  /// already exists for the same spec.
  std::optional<std::filesystem::path> checkpoint;
  /// Stop (throwing ExperimentInterrupted) after this many chunks of this run.
  std::optional<std::size_t> stop_after_chunks;
};

/// Runs spec.reps replications on a bounded worker pool. Reduction order is
/// fixed by replication index, so the result does not depend on the worker
/// count or on checkpoint/resume boundaries.
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

}  // namespace scbal
