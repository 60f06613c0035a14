#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "olaraw/estimator.hpp"
#include "olaraw/regime.hpp"

namespace olaraw {

enum class StrategyKind { kExt, kChunk, kHolistic, kSinglePass, kResourceAware };

/// CLI/config token: ext | chunk | holistic | singlepass | resource.
std::string_view to_token(StrategyKind kind);
StrategyKind parse_strategy(std::string_view token);

/// True for the strategies that estimate from partially extracted chunks.
bool samples_within_chunks(StrategyKind kind);

struct ResourceSnapshot {
  std::size_t buffered_chunks = 0;
  std::size_t idle_workers = 0;
  Regime regime = Regime::kIoBound;
  double timestamp_ms = 0.0;
};

/// IO_BOUND while there are at least as many idle workers as buffered chunks.
Regime classify_regime(std::size_t idle_workers, std::size_t buffered_chunks);

struct LocalTarget {
  double epsilon = 0.05;
  double confidence = 0.95;
  std::optional<double> var_max;  // per-chunk cap on the chunk-estimate variance
};

bool locally_satisfied(const ChunkStats& s, const LocalTarget& target);
/// Local test on raw moments of a chunk with M tuples. AVG uses the chunk's
/// own ratio, linearized.
bool moments_satisfied(EstimateKind kind, std::uint64_t M, const Moments& mo, const LocalTarget& target);

enum class ChunkAction { kContinue, kFinalize };

ChunkAction chunk_decision(StrategyKind kind, const ChunkStats& s, const LocalTarget& target,
                           const ResourceSnapshot& r);
/// Same rule with the local test already evaluated.
ChunkAction chunk_decision(StrategyKind kind, bool satisfied, bool exhausted, const ResourceSnapshot& r);

/// Evaluation interval bookkeeping. The controller keeps one shared instance;
/// each in-flight chunk works on its own copy of the decay state.
class TevalController {
 public:
  explicit TevalController(double delta_ms, double t_min_ms = 1.0);

  double t_eval() const { return t_eval_; }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  double calibration_mean() const { return calibration_mean_; }
  std::uint64_t calibration_count() const { return calibration_count_; }

  /// One decay step for the chunk this copy belongs to.
  void tick_update(bool satisfied, bool first_estimate, const ResourceSnapshot& r);
  /// Folds the extraction time of a fully extracted chunk into t_max.
  void record_full_chunk_time(double ms);
  /// Folds a chunk's time-to-satisfaction into the calibration mean and
  /// moves t_eval to it.
  void finalize(double time_to_satisfaction_ms);

 private:
  void clamp();

  double delta_ms_;
  double t_min_;
  double t_max_;
  double t_eval_;
  double calibration_mean_ = 0.0;
  std::uint64_t calibration_count_ = 0;
  double chunk_time_mean_ = 0.0;
  std::uint64_t chunk_time_count_ = 0;
};

/// Relative half-width within epsilon, or all data consumed.
bool global_stop(const EstimateSnapshot& snap, double epsilon, bool exhausted = false);

/// Longest prefix of `schedule` whose chunks are all in `completed`.
std::vector<std::uint32_t> chunk_reorder_barrier(std::span<const std::uint32_t> completed,
                                                 std::span<const std::uint32_t> schedule);

}  // namespace olaraw
