#include "scbal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "scbal/estimator.hpp"
#include "scbal/json_io.hpp"

namespace scbal {

namespace {

using json = nlohmann::json;

struct ReplicationOutcome {
  std::vector<std::vector<double>> estimates;
  std::exception_ptr error;
};

// Runs `count` replications starting at `first`, filling `out` by offset.
void run_chunk(const ExperimentSpec& spec, std::size_t first, std::size_t count,
               std::size_t workers, std::vector<ReplicationOutcome>& out) {
  out.assign(count, {});
  auto work = [&](std::size_t offset) {
    try {
      out[offset].estimates = run_replication(spec, first + offset);
    } catch (...) {
      out[offset].error = std::current_exception();
    }
  };

  const std::size_t pool = std::min(workers, count);
  if (pool <= 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> threads;
  threads.reserve(pool);
  for (std::size_t w = 0; w < pool; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) work(i);
    });
  }
}

std::string error_text(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

struct RunState {
  std::size_t completed = 0;
  std::vector<ErrorAccumulator> accumulators;
  std::vector<std::vector<double>> tables;  // row-major, one per estimator
};

json state_to_json(const std::string& fingerprint, const ExperimentSpec& spec,
                   const RunState& state) {
  json doc;
  doc["fingerprint"] = fingerprint;
  doc["completed"] = state.completed;
  json estimators = json::array();
  for (std::size_t e = 0; e < spec.estimators.size(); ++e) {
    json entry;
    entry["name"] = to_string(spec.estimators[e]);
    entry["count"] = state.accumulators[e].count();
    entry["mean"] = state.accumulators[e].mean();
    entry["m2"] = state.accumulators[e].m2();
    if (spec.retains_table()) entry["table"] = state.tables[e];
    estimators.push_back(std::move(entry));
  }
  doc["estimators"] = std::move(estimators);
  return doc;
}

void save_checkpoint(const std::filesystem::path& path, const std::string& fingerprint,
                     const ExperimentSpec& spec, const RunState& state) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out << state_to_json(fingerprint, spec, state).dump();
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

bool load_checkpoint(const std::filesystem::path& path, const std::string& fingerprint,
                     const ExperimentSpec& spec, RunState& state) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
  if (doc.value("fingerprint", std::string{}) != fingerprint) {
    throw ValidationError("checkpoint " + path.string() +
                          " was written for a different experiment spec");
  }
  const auto& estimators = doc.at("estimators");
  if (estimators.size() != spec.estimators.size()) {
    throw IoError("checkpoint estimator count does not match the spec");
  }
  state.completed = doc.at("completed").get<std::size_t>();
  for (std::size_t e = 0; e < spec.estimators.size(); ++e) {
    const auto& entry = estimators[e];
    state.accumulators[e] = ErrorAccumulator::restore(entry.at("count").get<std::size_t>(),
                                                      entry.at("mean").get<std::vector<double>>(),
                                                      entry.at("m2").get<std::vector<double>>());
    if (spec.retains_table()) state.tables[e] = entry.at("table").get<std::vector<double>>();
  }
  return true;
}

}  // namespace

const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::OracleSC:
      return "oracle_sc";
    case EstimatorKind::FittedSC:
      return "fitted_sc";
    case EstimatorKind::Naive:
      return "naive";
  }
  return "unknown";
}

std::optional<EstimatorKind> parse_estimator(std::string_view name) {
  for (auto kind : {EstimatorKind::OracleSC, EstimatorKind::FittedSC, EstimatorKind::Naive}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

bool ExperimentSpec::retains_table() const {
  return retain_table.value_or(reps <= kMaxRetainedReplications);
}

void validate(const ExperimentSpec& spec) {
  require_valid(spec.params);
  validate(spec.solver);
  if (spec.reps < 1) throw ValidationError("reps must be at least 1");
  if (spec.estimators.empty()) throw ValidationError("estimator set must be nonempty");
  auto sorted = spec.estimators;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("estimator set lists an estimator twice");
  }
  if (spec.mode == DgpMode::DesignatedTreated) {
    // Surfaces an infeasible treated unit before any replication runs.
    (void)oracle_weights(spec.params.mu, 0);
  }
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

ErrorAccumulator::ErrorAccumulator(std::size_t periods) : mean_(periods, 0.0), m2_(periods, 0.0) {}

void ErrorAccumulator::add(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != mean_.size() || truth.size() != mean_.size()) {
    throw ValidationError("accumulator expects " + std::to_string(mean_.size()) + " periods");
  }
  ++count_;
  const auto n = static_cast<double>(count_);
  for (std::size_t t = 0; t < mean_.size(); ++t) {
    const double error = estimate[t] - truth[t];
    const double delta = error - mean_[t];
    mean_[t] += delta / n;
    m2_[t] += delta * (error - mean_[t]);
  }
}

McSummary ErrorAccumulator::summary() const {
  McSummary s;
  s.replications = count_;
  s.mean_bias_per_period = mean_;
  s.se_per_period.resize(mean_.size());
  s.rmse_per_period.resize(mean_.size());
  const auto n = static_cast<double>(count_);
  for (std::size_t t = 0; t < mean_.size(); ++t) {
    const double m2 = std::max(m2_[t], 0.0);
    s.se_per_period[t] = count_ >= 2 ? std::sqrt(m2 / (n - 1.0) / n)
                                     : std::numeric_limits<double>::quiet_NaN();
    s.rmse_per_period[t] = count_ >= 1 ? std::sqrt(m2 / n + mean_[t] * mean_[t])
                                       : std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

ErrorAccumulator ErrorAccumulator::restore(std::size_t count, std::vector<double> mean,
                                           std::vector<double> m2) {
  if (mean.size() != m2.size()) throw ValidationError("accumulator state is inconsistent");
  ErrorAccumulator acc;
  acc.count_ = count;
  acc.mean_ = std::move(mean);
  acc.m2_ = std::move(m2);
  return acc;
}

McSummary summarize(const Matrix& effects, std::span<const double> truth) {
  if (effects.rows() < 1) throw ValidationError("summarize: effect table is empty");
  if (static_cast<std::size_t>(effects.cols()) != truth.size()) {
    throw ValidationError("summarize: table has " + std::to_string(effects.cols()) +
                          " periods but truth has " + std::to_string(truth.size()));
  }
  ErrorAccumulator acc(truth.size());
  std::vector<double> row(truth.size());
  for (Eigen::Index r = 0; r < effects.rows(); ++r) {
    for (Eigen::Index t = 0; t < effects.cols(); ++t) row[static_cast<std::size_t>(t)] = effects(r, t);
    acc.add(row, truth);
  }
  return acc.summary();
}

const EstimatorOutcome& ExperimentResult::outcome(EstimatorKind kind) const {
  for (const auto& o : outcomes) {
    if (o.kind == kind) return o;
  }
  throw ValidationError(std::string("experiment did not run estimator ") + to_string(kind));
}

ReplicationError::ReplicationError(std::size_t replication, const std::string& what)
    : ValidationError("replication " + std::to_string(replication) + ": " + what),
      replication_(replication) {}

ExperimentInterrupted::ExperimentInterrupted(std::size_t completed)
    : std::runtime_error("experiment interrupted after " + std::to_string(completed) +
                         " replications"),
      completed_(completed) {}

std::vector<std::vector<double>> run_replication(const ExperimentSpec& spec, std::size_t index) {
  const SimulatedPanel sim = simulate_panel(spec.params, spec.mode, RngSeed{spec.master_seed, index});
  std::vector<std::vector<double>> out;
  out.reserve(spec.estimators.size());
  for (EstimatorKind kind : spec.estimators) {
    switch (kind) {
      case EstimatorKind::OracleSC:
        out.push_back(estimate_effect(sim.panel, sim.oracle_beta, WeightSource::Oracle).alpha_hat);
        break;
      case EstimatorKind::FittedSC: {
        const FitResult fit = fit_weights(sim.panel, spec.solver);
        out.push_back(estimate_effect(sim.panel, fit.weights, WeightSource::Fitted).alpha_hat);
        break;
      }
      case EstimatorKind::Naive:
        out.push_back(naive_difference(sim.panel).alpha_hat);
        break;
    }
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  validate(spec);
  if (options.chunk_size < 1) throw ValidationError("chunk_size must be at least 1");
  const auto started = std::chrono::steady_clock::now();

  const std::size_t periods = spec.params.post_periods();
  const std::size_t estimators = spec.estimators.size();
  const std::size_t workers = resolve_workers(spec.workers);
  const bool retain = spec.retains_table();

  RunState state;
  state.accumulators.assign(estimators, ErrorAccumulator(periods));
  state.tables.assign(estimators, {});

  std::string fingerprint;
  if (options.checkpoint) {
    fingerprint = spec_echo_json(spec);
    load_checkpoint(*options.checkpoint, fingerprint, spec, state);
  }

  std::vector<ReplicationOutcome> chunk;
  std::size_t chunks_this_run = 0;
  while (state.completed < spec.reps) {
    if (options.stop_after_chunks && chunks_this_run >= *options.stop_after_chunks) {
      throw ExperimentInterrupted(state.completed);
    }
    const std::size_t count = std::min(options.chunk_size, spec.reps - state.completed);
    run_chunk(spec, state.completed, count, workers, chunk);

    for (std::size_t i = 0; i < count; ++i) {
      if (chunk[i].error) {
        throw ReplicationError(state.completed + i, error_text(chunk[i].error));
      }
      for (std::size_t e = 0; e < estimators; ++e) {
        state.accumulators[e].add(chunk[i].estimates[e], spec.params.alpha);
        if (retain) {
          auto& table = state.tables[e];
          table.insert(table.end(), chunk[i].estimates[e].begin(), chunk[i].estimates[e].end());
        }
      }
    }
    state.completed += count;
    ++chunks_this_run;
    if (options.checkpoint) save_checkpoint(*options.checkpoint, fingerprint, spec, state);
  }

  ExperimentResult result;
  result.spec = spec;
  for (std::size_t e = 0; e < estimators; ++e) {
    EstimatorOutcome outcome{spec.estimators[e], state.accumulators[e].summary(), std::nullopt};
    if (retain) {
      outcome.table = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                     Eigen::RowMajor>>(
          state.tables[e].data(), static_cast<Eigen::Index>(spec.reps),
          static_cast<Eigen::Index>(periods));
    }
    result.outcomes.push_back(std::move(outcome));
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace scbal
