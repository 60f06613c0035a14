#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "olaraw/estimator.hpp"
#include "olaraw/int128.hpp"
#include "olaraw/query.hpp"
#include "olaraw/random.hpp"
#include "olaraw/raw_store.hpp"
#include "olaraw/strategies.hpp"

namespace olaraw {

struct PipelineConfig {
  std::size_t workers = 4;
  std::size_t buffer_capacity = 4;
  double per_tuple_cost_us = 0.0;     // busy-spin per extracted tuple
  bool cost_on_match_only = false;    // spin only for tuples passing the predicate
  double read_bandwidth_mb_s = 0.0;   // simulated disk; 0 reads at full speed
  double chunk_delay_max_ms = 0.0;    // random stall at the start of every chunk
  std::size_t group_tuples = 64;      // tuples between publications
  bool lockstep = false;              // one chunk in flight, released by acknowledge()
  std::uint64_t seed = 1;

  void validate() const;
};

/// Fisher-Yates permutation of {0..n-1} materialized only as far as it has
/// been read.
class LazyPermutation {
 public:
  LazyPermutation(std::uint64_t seed, std::uint32_t n);

  std::uint32_t operator[](std::uint64_t k);
  std::uint32_t size() const { return static_cast<std::uint32_t>(slots_.size()); }

 private:
  Rng rng_;
  std::vector<std::uint32_t> slots_;
  std::uint64_t fixed_ = 0;
};

/// Seed of chunk j's in-chunk permutation under run seed `seed`.
std::uint64_t chunk_seed(std::uint64_t seed, std::uint32_t chunk);

struct GroupMoments {
  double sx = 0.0;
  double sxx = 0.0;
  double sc = 0.0;
};

struct ExtractTask {
  std::uint32_t chunk = 0;
  std::size_t schedule_pos = 0;
  std::uint64_t perm_seed = 0;
  bool sequential = false;   // identity order (EXT)
  std::uint64_t start = 0;   // circular offset into the permutation
  std::uint64_t cursor = 0;  // permutation positions consumed
  std::uint64_t M = 0;

  Moments moments;                          // over accepted tuples
  std::map<double, GroupMoments> groups;    // m is moments.m
  Int128 exact = 0;
  bool exact_valid = false;
  std::uint64_t rejects = 0;
  // Captured columns, row-major, one row per consumed position (in
  // permutation order); `row_ok` is 0 for rejected records.
  std::vector<double> rows;
  std::vector<std::uint8_t> row_ok;

  /// Tuples the estimator may treat as the chunk's population.
  std::uint64_t effective_M() const { return M - rejects; }
  bool exhausted() const { return cursor >= M; }
};

struct ExtractOptions {
  std::uint64_t quota = 0;
  std::optional<std::chrono::steady_clock::time_point> deadline;
  std::span<const std::size_t> capture;  // schema positions to copy into rows
  bool exact = false;
  double cost_us = 0.0;
  bool cost_on_match_only = false;
};

/// Permutation position of the k-th tuple of a task.
using PositionFn = std::function<std::uint32_t(std::uint64_t)>;

/// Extracts up to `opts.quota` tuples in permutation order starting at the
/// task's cursor. Malformed records are skipped and tallied.
void extract_batch(ExtractTask& task, const RawChunk& chunk, const BoundQuery& query, const PositionFn& position,
                   const ExtractOptions& opts);

/// Busy-waits for `us` microseconds.
void spin_for_us(double us);

enum class SlotState { kPending, kBuffered, kRunning, kDone };

/// What the controller sees of one plan item.
struct SlotView {
  std::uint32_t chunk = 0;
  SlotState state = SlotState::kPending;
  std::uint64_t M = 0;  // effective
  std::uint64_t cursor = 0;
  Moments moments;
  std::map<double, GroupMoments> groups;
  Int128 exact = 0;
  bool exact_valid = false;
  std::uint64_t rejects = 0;
  bool from_disk = true;
  bool finalize_requested = false;
  double started_ms = -1.0;
  double finished_ms = -1.0;
};

/// Longest plan prefix whose items have at least one accepted tuple.
std::size_t included_prefix(std::span<const SlotView> slots);

/// Moments of the included prefix in schedule order.
std::vector<ChunkMoments> snapshot_in_order(std::span<const SlotView> slots);

/// Per-chunk local rule the workers apply on their own (single-pass).
struct WorkerRule {
  EstimateKind kind = EstimateKind::kSum;
  LocalTarget target;
  bool grouped = false;
};

bool task_satisfied(const WorkerRule& rule, std::uint64_t M, const Moments& mo,
                    const std::map<double, GroupMoments>& groups);

/// One reader thread, P extraction workers, a bounded chunk buffer. Plan
/// items run in order; the controller polls consistent per-item views.
class Pipeline {
 public:
  Pipeline(const RawFile& file, const ChunkIndex& index, const BoundQuery& query, PipelineConfig config,
           std::vector<ExtractTask> plan, std::vector<std::size_t> capture, bool exact,
           std::optional<WorkerRule> rule);
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  void start();
  /// Asks every activity to quiesce and joins them.
  void stop();
  void join();

  std::vector<SlotView> views() const;
  ResourceSnapshot resources() const;
  void request_finalize(std::size_t plan_pos);
  /// Lockstep mode: lets the worker that finished `plan_pos` move on.
  void acknowledge(std::size_t plan_pos);

  /// Waits until something changed (a chunk finished, an error, the end) or
  /// until `deadline`. Returns true when woken by an event.
  bool wait_event(std::chrono::steady_clock::time_point deadline);
  bool done() const;
  std::exception_ptr error() const;

  std::uint64_t chunks_read() const;
  std::uint64_t bytes_read() const;
  double elapsed_ms() const;
  std::chrono::steady_clock::time_point t0() const { return t0_; }

  /// Final per-item tasks, valid after join().
  std::vector<ExtractTask>& tasks() { return tasks_; }

 private:
  struct Buffered {
    std::size_t plan_pos;
    RawChunk chunk;
  };

  void reader_main();
  void worker_main(std::size_t id);
  void fail(std::exception_ptr e);
  void publish(std::size_t pos, const ExtractTask& task);

  const RawFile& file_;
  const ChunkIndex& index_;
  const BoundQuery& query_;
  PipelineConfig config_;
  std::vector<std::size_t> capture_;
  bool exact_;
  std::optional<WorkerRule> rule_;

  std::vector<ExtractTask> tasks_;
  std::vector<SlotView> slots_;
  std::vector<bool> acked_;

  mutable std::mutex mu_;
  std::condition_variable work_cv_;     // workers and reader
  std::condition_variable control_cv_;  // controller
  std::deque<Buffered> buffer_;
  std::size_t idle_workers_ = 0;
  std::size_t unacked_ = 0;  // lockstep: chunks read but not yet acknowledged
  std::size_t exited_workers_ = 0;
  bool reader_done_ = false;
  bool stop_ = false;
  std::uint64_t events_ = 0;
  std::uint64_t events_seen_ = 0;
  std::uint64_t chunks_read_ = 0;
  std::uint64_t bytes_read_ = 0;
  std::exception_ptr error_;

  std::chrono::steady_clock::time_point t0_;
  std::thread reader_;
  std::vector<std::thread> workers_;
  bool started_ = false;
  bool joined_ = false;
};

}  // namespace olaraw
