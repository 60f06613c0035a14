#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "olaraw/controller.hpp"
#include "olaraw/int128.hpp"
#include "olaraw/query.hpp"
#include "olaraw/raw_store.hpp"
#include "olaraw/strategies.hpp"

namespace olaraw {

struct OracleResult {
  double value = 0.0;
  std::optional<Int128> exact;          // integral SUM/COUNT
  std::map<double, double> groups;      // GROUP BY key -> aggregate
  std::map<double, Int128> exact_groups;
  std::uint64_t tuples = 0;
  std::uint64_t rejects = 0;
};

/// Exact answer by a sequential scan with its own record decoder and
/// expression evaluator. Malformed records are skipped and counted.
OracleResult oracle_aggregate(const std::filesystem::path& file, const Schema& schema, const AggregateQuery& q);

struct DesignReport {
  std::uint64_t designs = 0;
  double tau = 0.0;
  double mean_tau_hat = 0.0;
  double var_tau_hat = 0.0;   // exact variance over the design space
  double mean_var_hat = 0.0;  // +inf when some design has an unbounded estimate
  double var_true = 0.0;      // closed form for the same design
};

/// Every size-n chunk subset and, inside each, every min(m, M_j)-subset of
/// tuples, each with its design probability. Limited to N <= 5, M_j <= 6.
DesignReport enumerate_designs(const std::vector<std::vector<double>>& chunks, std::size_t n, std::size_t m);

struct CoverageRow {
  double fraction = 0.0;
  std::size_t runs = 0;
  std::size_t covered = 0;
  double ratio() const { return runs == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(runs); }
};

struct CoverageReport {
  std::string strategy;
  double confidence = 0.95;
  std::vector<CoverageRow> rows;
};

struct CoverageConfig {
  std::size_t runs = 100;
  std::vector<double> checkpoints{0.02, 0.03, 0.04, 0.05, 0.10, 0.20, 0.30};
  PipelineConfig pipeline;
  std::uint64_t base_seed = 1000;
  double confidence = 0.95;
  bool include_reordered = true;
};

/// Bi-level in schedule order, chunk-level in completion order and, when
/// asked, chunk-level in schedule order. A checkpoint is the first
/// evaluation with processed chunk-equivalents of at least fraction * N.
std::vector<CoverageReport> monte_carlo_coverage(const Dataset& data, const AggregateQuery& q, double truth,
                                                 const CoverageConfig& config);

struct BenchRow {
  StrategyKind strategy = StrategyKind::kExt;
  RunState state = RunState::kRunning;
  double time_ms = 0.0;
  std::uint64_t chunks_read = 0;
  std::uint64_t tuples_extracted = 0;
  double chunk_ratio = 0.0;   // of N
  double tuple_ratio = 0.0;   // of all tuples
  double estimate = 0.0;
  double error_ratio = 0.0;
};

/// One run per strategy, identical seeds and configuration.
std::vector<BenchRow> regime_benchmark(const Dataset& data, const AggregateQuery& q,
                                       const std::vector<StrategyKind>& strategies, const PipelineConfig& pipeline);

std::string format_coverage_report(const std::vector<CoverageReport>& reports);
std::string format_benchmark(const std::vector<BenchRow>& rows);

/// Dataset, query and pipeline settings for one of the standard experiments.
struct ExperimentSetup {
  SyntheticSpec spec;
  std::string sql;
  PipelineConfig pipeline;
  double epsilon = 0.05;
  double delta_ms = 1000.0;
};

/// 64 chunks x 4,096 tuples x 16 zipf columns.
SyntheticSpec default_dataset_spec();
/// Clustered blocks with a wide noise band, a predicate whose selectivity
/// grows with the block, 16 workers and cost on matching tuples.
ExperimentSetup coverage_setup();
/// One worker, per-tuple cost, blocks that are homogeneous inside and far
/// apart from each other.
ExperimentSetup cpu_bound_setup();
/// Sixteen workers, no cost, a throttled reader, and chunks that share one
/// total but vary inside.
ExperimentSetup io_bound_setup();

/// True when `chunks` are the first |chunks| entries of `schedule`.
bool is_schedule_prefix(const std::vector<std::uint32_t>& chunks, const std::vector<std::uint32_t>& schedule);
/// Largest gap between consecutive trace timestamps, measured from 0.
double max_report_gap(const std::vector<EstimateSnapshot>& trace);

}  // namespace olaraw
