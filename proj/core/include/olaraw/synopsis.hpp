#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "olaraw/pipeline.hpp"
#include "olaraw/query.hpp"
#include "olaraw/raw_store.hpp"

namespace olaraw {

enum class SynopsisAnswer { kFull, kPartial, kRebuild };

std::string_view to_string(SynopsisAnswer a);

/// Retained sample of one chunk: the contiguous circular window
/// [start, start + length) of the chunk's fixed permutation.
struct SynopsisChunk {
  std::uint32_t chunk = 0;
  std::uint64_t M = 0;
  std::uint64_t seed = 0;
  std::uint64_t start = 0;
  std::uint64_t length = 0;
  double variance = 0.0;         // chunk-estimate variance from the last query touching it
  std::vector<double> rows;      // length x columns, row-major
  std::vector<std::uint8_t> ok;  // 0 marks a rejected record

  std::uint64_t cursor() const { return M == 0 ? 0 : (start + length) % M; }
  bool complete() const { return length >= M; }
};

struct AccessPlan {
  std::vector<std::uint32_t> estimation_order;  // memory chunks first, in stored order
  std::vector<std::uint32_t> disk_order;        // chunks to read, in processing order
};

struct SynopsisSummary {
  std::uint64_t budget_bytes = 0;
  std::uint64_t budget_tuples = 0;
  std::uint64_t retained_tuples = 0;
  std::size_t chunks_present = 0;
  std::size_t chunks_total = 0;
  std::vector<std::string> columns;
  std::string origin;
};

/// Memory-budgeted bi-level sample shared by a sequence of queries over one
/// file. Allocation across chunks is proportional to the stored variance.
class Synopsis {
 public:
  static constexpr std::uint64_t kFloor = 2;

  explicit Synopsis(std::uint64_t budget_bytes = 0, std::size_t num_chunks = 0);

  std::uint64_t budget_bytes() const { return budget_bytes_; }
  /// Budget in tuples: bytes / (8 * materialized columns).
  std::uint64_t budget_tuples() const;
  std::uint64_t retained() const;
  std::size_t num_chunks() const { return num_chunks_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::string& origin() const { return origin_; }
  /// Present chunks in the order they were first inserted.
  const std::vector<SynopsisChunk>& chunks() const { return chunks_; }
  const SynopsisChunk* find(std::uint32_t chunk) const;
  bool empty() const { return chunks_.empty(); }
  /// Evictions performed so far (budget below the per-chunk floor).
  const std::vector<std::uint32_t>& evicted() const { return evicted_; }

  /// Drops every chunk and starts over with new materialized columns.
  void reset(std::vector<std::string> columns, std::string origin, std::size_t num_chunks);

  /// Adds chunk j's window; trims windows from the front to honor the budget.
  void insert_chunk(SynopsisChunk chunk);
  /// Replaces the window of a present chunk with a longer one that starts at
  /// the same position (old samples followed by new ones), then rebalances.
  void extend_chunk(SynopsisChunk chunk);
  /// Reads `needed` more tuples of chunk j from `raw`, continuing at the
  /// cursor and wrapping around; stops at the full chunk. Returns the number
  /// of positions added.
  std::uint64_t resample_chunk(std::uint32_t chunk, std::uint64_t needed, const RawChunk& raw,
                               const Schema& schema);

  SynopsisAnswer can_answer(const AggregateQuery& q) const;
  /// `unsatisfied`: memory chunks whose retained sample misses the local
  /// target. `schedule`: the query's own chunk order, used for absent chunks.
  AccessPlan plan_access_order(SynopsisAnswer mode, std::span<const std::uint32_t> unsatisfied,
                               std::span<const std::uint32_t> schedule) const;

  /// Continuation task for chunk j: retained rows evaluated under `query`.
  ExtractTask task_for(const SynopsisChunk& c, const BoundQuery& query) const;
  /// Schema positions of the materialized columns.
  std::vector<std::size_t> column_positions(const Schema& schema) const;

  SynopsisSummary summary() const;

  std::string export_text() const;
  static Synopsis import_text(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Synopsis load(const std::filesystem::path& path);

 private:
  std::size_t width() const { return columns_.size(); }
  void rebalance();
  void trim_front(SynopsisChunk& c, std::uint64_t keep);

  std::uint64_t budget_bytes_;
  std::size_t num_chunks_;
  std::vector<std::string> columns_;
  std::string origin_;
  std::vector<SynopsisChunk> chunks_;
  std::vector<std::uint32_t> evicted_;
};

/// Largest-remainder proportional split of `budget` over `weights`, with a
/// per-entry floor and caps. All-zero weights split evenly. Ties go to the
/// lower index. Requires floor * size <= budget.
std::vector<std::uint64_t> proportional_allocation(std::uint64_t budget, std::span<const double> weights,
                                                   std::span<const std::uint64_t> caps, std::uint64_t floor);

}  // namespace olaraw
