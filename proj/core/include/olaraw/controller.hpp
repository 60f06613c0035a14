#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "olaraw/estimator.hpp"
#include "olaraw/int128.hpp"
#include "olaraw/pipeline.hpp"
#include "olaraw/query.hpp"
#include "olaraw/raw_store.hpp"
#include "olaraw/strategies.hpp"
#include "olaraw/synopsis.hpp"

namespace olaraw {

/// A raw file with its schema and chunk index, ready for queries.
struct Dataset {
  std::filesystem::path path;
  Schema schema;
  ChunkIndex index;
  std::unique_ptr<RawFile> file;

  std::size_t num_chunks() const { return index.num_chunks(); }
};

/// Loads the schema sidecar and the chunk index sidecar. A missing index is
/// built with `target_chunk_bytes` (default: a 64th of the file, rounded up) and saved.
Dataset open_dataset(const std::filesystem::path& path, std::optional<std::uint64_t> target_chunk_bytes = {});

enum class RunState { kRunning, kSatisfied, kStoppedByUser, kExactComplete, kExhausted, kFailed };

std::string_view to_string(RunState s);
bool is_terminal(RunState s);

/// What the controller saw at one evaluation; handed to observers.
struct Evaluation {
  double timestamp_ms = 0.0;
  std::vector<EstimateSnapshot> snapshots;  // one per group (one when ungrouped)
  double processed_chunks = 0.0;            // sum over chunks of m_j / M_j
  std::size_t completed_chunks = 0;
  bool satisfied = false;
};

struct RunOptions {
  StrategyKind strategy = StrategyKind::kResourceAware;
  PipelineConfig pipeline;
  /// CHUNK only: estimate over the schedule prefix of completed chunks.
  /// false includes completed chunks in completion order.
  bool reorder = true;
  double t_min_ms = 1.0;
  Synopsis* synopsis = nullptr;
  const std::atomic<bool>* stop_requested = nullptr;
  std::function<void(const EstimateSnapshot&)> on_snapshot;
  std::function<void(const Evaluation&)> on_evaluation;
};

struct ChunkOutcome {
  std::uint32_t chunk = 0;
  std::uint64_t M = 0;
  std::uint64_t m = 0;
  bool from_disk = false;
  bool finalized = false;  // ended before the whole chunk was extracted
  bool settled = false;    // finished before the run ended (not cut short)
};

struct RunResult {
  RunState state = RunState::kRunning;
  std::string error;
  std::uint64_t seed = 0;
  std::vector<EstimateSnapshot> trace;   // reported snapshots, in order
  std::vector<EstimateSnapshot> final;   // last evaluation (one per group)
  std::optional<Int128> exact;           // EXT on an integral expression
  std::vector<std::uint32_t> schedule;   // estimation order
  std::vector<ChunkOutcome> chunks;      // per estimation-order item
  std::uint64_t chunks_read = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t tuples_extracted = 0;    // positions consumed from raw data
  std::uint64_t rejects = 0;
  double elapsed_ms = 0.0;
  double t_max_ms = 0.0;
  std::optional<SynopsisAnswer> synopsis_mode;
  std::size_t evaluations = 0;
};

/// Runs one query to a terminal state, streaming snapshots every delta.
RunResult run_query(const Dataset& data, const AggregateQuery& query, const RunOptions& options);

/// A run owned by the service: executes on its own thread and keeps the
/// snapshots for subscribers.
class QueryRun {
 public:
  QueryRun(std::string id, const Dataset& data, AggregateQuery query, RunOptions options,
           std::mutex* synopsis_mutex);
  ~QueryRun();

  const std::string& id() const { return id_; }
  const AggregateQuery& query() const { return query_; }
  StrategyKind strategy() const { return options_.strategy; }
  RunState state() const;
  /// Requests a stop; returns the state after the request took effect.
  RunState stop();
  /// Snapshots from index `from`; blocks until one is available, the run
  /// ends, or `timeout_ms` passes.
  std::vector<EstimateSnapshot> wait_snapshots(std::size_t from, int timeout_ms) const;
  std::size_t snapshot_count() const;
  std::optional<RunResult> result() const;

 private:
  void main();

  std::string id_;
  const Dataset& data_;
  AggregateQuery query_;
  RunOptions options_;
  std::mutex* synopsis_mutex_;

  std::atomic<bool> stop_{false};
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  RunState state_ = RunState::kRunning;
  std::vector<EstimateSnapshot> snapshots_;
  std::optional<RunResult> result_;
  std::thread thread_;
};

}  // namespace olaraw
