#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "olaraw/regime.hpp"

namespace olaraw {

/// Per-chunk sample statistics. m == 0 means "not started".
struct ChunkStats {
  std::uint32_t chunk = 0;
  std::uint64_t M = 0;   // tuples in the chunk
  std::uint64_t m = 0;   // tuples sampled so far
  double y1 = 0.0;       // sum of x over the sample
  double y2 = 0.0;       // sum of x^2 over the sample
};

/// Raw moments kept by workers. For AVG the masked expression x and the
/// predicate indicator c satisfy x*c = x and c*c = c, so four sums suffice.
struct Moments {
  std::uint64_t m = 0;
  double sx = 0.0;
  double sxx = 0.0;
  double sc = 0.0;

  void add(double x, double c) {
    ++m;
    sx += x;
    sxx += x * x;
    sc += c;
  }
  void merge(const Moments& o) {
    m += o.m;
    sx += o.sx;
    sxx += o.sxx;
    sc += o.sc;
  }
};

double chunk_estimate(const ChunkStats& s);
double bilevel_estimate(std::span<const ChunkStats> stats, std::size_t N);

struct VarianceTerms {
  double between = 0.0;
  double within = 0.0;
  double total() const { return between + within; }
};

/// Sampling variance of the estimator for a fixed design: n chunks drawn
/// out of `chunks`, m[j] tuples drawn from chunk j. Needs the full data.
VarianceTerms bilevel_variance_true_terms(const std::vector<std::vector<double>>& chunks, std::size_t n,
                                          std::span<const std::uint64_t> m);
double bilevel_variance_true(const std::vector<std::vector<double>>& chunks, std::size_t n,
                             std::span<const std::uint64_t> m);

/// Unbiased variance estimate from the sampled chunks. Infinite when n = 1
/// or when some chunk has m = 1 < M.
VarianceTerms bilevel_variance_terms(std::span<const ChunkStats> stats, std::size_t N);
double bilevel_variance_estimate(std::span<const ChunkStats> stats, std::size_t N);

/// Within-chunk sum of squared deviations, y2 - y1^2/m clamped at 0.
double within_deviation(const ChunkStats& s);
/// Variance of the chunk estimate; 0 for a full chunk, +inf for m < 2 < M.
double chunk_variance(const ChunkStats& s);

/// Standard normal quantile at 1 - (1-c)/2.
double z_value(double confidence);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double half_width = 0.0;
  bool bounded = true;
};

Interval confidence_interval(double tau_hat, double var_hat, double confidence);

struct LocalInterval {
  double estimate = 0.0;
  double half_width = 0.0;
  bool satisfied(double epsilon) const;
};

LocalInterval local_chunk_interval(const ChunkStats& s, double confidence);

struct PointEstimate {
  double tau_hat = 0.0;
  double var_hat = 0.0;
};

/// Chunk-level sampling over fully extracted chunk sums.
PointEstimate chunk_level_estimate(std::span<const double> chunk_sums, std::size_t N);

/// (hi - lo) / |tau_hat|. Zero-width intervals give 0; an unbounded interval
/// or |tau_hat| below 1e-12 gives +inf.
double error_ratio(double tau_hat, const Interval& ci);

/// Per-chunk moments paired with the chunk's size, in schedule order.
struct ChunkMoments {
  std::uint32_t chunk = 0;
  std::uint64_t M = 0;
  Moments moments;
};

enum class EstimateKind { kSum, kCount, kAvg };

/// Builds the bi-level estimate for SUM, COUNT or AVG (ratio of the SUM and
/// COUNT estimates, variance by linearization).
PointEstimate estimate_from_moments(EstimateKind kind, std::span<const ChunkMoments> chunks, std::size_t N);

/// ChunkStats view of one chunk's moments for the given aggregate. For AVG,
/// `ratio` is the current global ratio used to linearize.
ChunkStats stats_for(EstimateKind kind, const ChunkMoments& c, double ratio = 0.0);

struct EstimateSnapshot {
  double timestamp_ms = 0.0;
  double estimate = 0.0;
  double var_hat = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool bounded = false;
  double error_ratio = 0.0;
  std::size_t n_chunks = 0;
  std::uint64_t tuples = 0;
  std::uint64_t chunks_read = 0;
  std::uint64_t bytes_read = 0;
  Regime regime = Regime::kIoBound;
  std::optional<double> group;

  std::vector<std::uint32_t> included;  // schedule prefix the estimate used
  bool stale = false;
  bool final = false;
  bool tainted = false;  // rejected records were seen
};

/// Fills the interval fields of `snap` from estimate/var_hat.
void finish_snapshot(EstimateSnapshot& snap, double confidence);

}  // namespace olaraw
