#include "olaraw/estimator.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "olaraw/error.hpp"

namespace olaraw {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRelativeFloor = 1e-12;
}  // namespace

double chunk_estimate(const ChunkStats& s) {
  if (s.m == 0) throw EstimateError("chunk " + std::to_string(s.chunk) + " has no sampled tuples");
  if (s.m == s.M) return s.y1;
  return static_cast<double>(s.M) / static_cast<double>(s.m) * s.y1;
}

double bilevel_estimate(std::span<const ChunkStats> stats, std::size_t N) {
  if (stats.empty()) throw EstimateError("no chunks to estimate from");
  double sum = 0.0;
  for (const auto& s : stats) sum += chunk_estimate(s);
  if (stats.size() == N) return sum;
  return static_cast<double>(N) / static_cast<double>(stats.size()) * sum;
}

VarianceTerms bilevel_variance_true_terms(const std::vector<std::vector<double>>& chunks, std::size_t n,
                                          std::span<const std::uint64_t> m) {
  const std::size_t N = chunks.size();
  if (N == 0 || n == 0 || n > N) throw EstimateError("design needs 1 <= n <= N");
  if (m.size() != N) throw EstimateError("one m per chunk required");
  const double Nd = static_cast<double>(N), nd = static_cast<double>(n);

  std::vector<double> y(N);
  for (std::size_t j = 0; j < N; ++j) y[j] = std::accumulate(chunks[j].begin(), chunks[j].end(), 0.0);
  const double tau = std::accumulate(y.begin(), y.end(), 0.0);

  VarianceTerms t;
  if (n < N) {
    if (N == 1) throw EstimateError("between-chunk term undefined for N = 1");
    double dev = 0.0;
    for (double yj : y) dev += (yj - tau / Nd) * (yj - tau / Nd);
    t.between = Nd / (Nd - 1.0) * ((Nd - nd) / nd) * dev;
  }
  double within = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    const auto M = chunks[j].size();
    if (m[j] < 1 || m[j] > M) throw EstimateError("design needs 1 <= m_j <= M_j");
    if (m[j] == M) continue;
    const double Md = static_cast<double>(M), md = static_cast<double>(m[j]);
    const double mean = y[j] / Md;
    double dev = 0.0;
    for (double x : chunks[j]) dev += (x - mean) * (x - mean);
    within += Md / (Md - 1.0) * ((Md - md) / md) * dev;
  }
  t.within = Nd / nd * within;
  return t;
}

double bilevel_variance_true(const std::vector<std::vector<double>>& chunks, std::size_t n,
                             std::span<const std::uint64_t> m) {
  return bilevel_variance_true_terms(chunks, n, m).total();
}

double within_deviation(const ChunkStats& s) {
  if (s.m == 0) return 0.0;
  const double d = s.y2 - s.y1 * s.y1 / static_cast<double>(s.m);
  return d > 0.0 ? d : 0.0;
}

double chunk_variance(const ChunkStats& s) {
  if (s.m >= s.M) return 0.0;
  if (s.m < 2) return kInf;
  const double Md = static_cast<double>(s.M), md = static_cast<double>(s.m);
  return Md / md * ((Md - md) / (md - 1.0)) * within_deviation(s);
}

VarianceTerms bilevel_variance_terms(std::span<const ChunkStats> stats, std::size_t N) {
  const std::size_t n = stats.size();
  if (n == 0) throw EstimateError("no chunks to estimate from");
  const double Nd = static_cast<double>(N), nd = static_cast<double>(n);

  VarianceTerms t;
  if (n < N) {
    if (n == 1) {
      t.between = kInf;
    } else {
      std::vector<double> yhat(n);
      for (std::size_t k = 0; k < n; ++k) yhat[k] = chunk_estimate(stats[k]);
      const double mean = std::accumulate(yhat.begin(), yhat.end(), 0.0) / nd;
      double dev = 0.0;
      for (double v : yhat) dev += (v - mean) * (v - mean);
      t.between = Nd / nd * ((Nd - nd) / (nd - 1.0)) * dev;
    }
  }
  double within = 0.0;
  for (const auto& s : stats) within += chunk_variance(s);
  t.within = Nd / nd * within;
  return t;
}

double bilevel_variance_estimate(std::span<const ChunkStats> stats, std::size_t N) {
  return bilevel_variance_terms(stats, N).total();
}

double z_value(double confidence) {
  if (!(confidence > 0.0 && confidence <= 1.0)) throw EstimateError("confidence must lie in (0,1]");
  if (confidence == 1.0) return kInf;
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, 1.0 - (1.0 - confidence) / 2.0);
}

Interval confidence_interval(double tau_hat, double var_hat, double confidence) {
  Interval ci;
  if (!std::isfinite(var_hat)) {
    ci.bounded = false;
    ci.half_width = kInf;
    ci.lo = -kInf;
    ci.hi = kInf;
    return ci;
  }
  const double z = z_value(confidence);
  if (var_hat > 0.0 && std::isinf(z)) {
    ci.bounded = false;
    ci.half_width = kInf;
    ci.lo = -kInf;
    ci.hi = kInf;
    return ci;
  }
  ci.half_width = var_hat > 0.0 ? z * std::sqrt(var_hat) : 0.0;
  ci.lo = tau_hat - ci.half_width;
  ci.hi = tau_hat + ci.half_width;
  return ci;
}

bool LocalInterval::satisfied(double epsilon) const {
  if (half_width == 0.0) return true;
  if (!std::isfinite(half_width) || std::fabs(estimate) < kRelativeFloor) return false;
  return half_width <= epsilon * std::fabs(estimate);
}

LocalInterval local_chunk_interval(const ChunkStats& s, double confidence) {
  LocalInterval li;
  li.estimate = s.m == 0 ? 0.0 : chunk_estimate(s);
  if (s.m == 0) {
    li.half_width = kInf;
    return li;
  }
  const double v = chunk_variance(s);
  li.half_width = !std::isfinite(v) ? kInf : v > 0.0 ? z_value(confidence) * std::sqrt(v) : 0.0;
  return li;
}

PointEstimate chunk_level_estimate(std::span<const double> chunk_sums, std::size_t N) {
  std::vector<ChunkStats> stats;
  stats.reserve(chunk_sums.size());
  for (double y : chunk_sums) stats.push_back(ChunkStats{0, 1, 1, y, y * y});
  return {bilevel_estimate(stats, N), bilevel_variance_estimate(stats, N)};
}

double error_ratio(double tau_hat, const Interval& ci) {
  if (!ci.bounded) return kInf;
  const double width = ci.hi - ci.lo;
  if (width == 0.0) return 0.0;
  if (std::fabs(tau_hat) < kRelativeFloor) return kInf;
  return width / std::fabs(tau_hat);
}

ChunkStats stats_for(EstimateKind kind, const ChunkMoments& c, double ratio) {
  ChunkStats s{c.chunk, c.M, c.moments.m, 0.0, 0.0};
  const Moments& mo = c.moments;
  switch (kind) {
    case EstimateKind::kSum:
      s.y1 = mo.sx;
      s.y2 = mo.sxx;
      break;
    case EstimateKind::kCount:
      s.y1 = mo.sc;
      s.y2 = mo.sc;
      break;
    case EstimateKind::kAvg:
      s.y1 = mo.sx - ratio * mo.sc;
      s.y2 = mo.sxx - 2.0 * ratio * mo.sx + ratio * ratio * mo.sc;
      break;
  }
  return s;
}

PointEstimate estimate_from_moments(EstimateKind kind, std::span<const ChunkMoments> chunks, std::size_t N) {
  if (chunks.empty()) throw EstimateError("no chunks to estimate from");
  std::vector<ChunkStats> stats;
  stats.reserve(chunks.size());
  auto fill = [&](EstimateKind k, double ratio) {
    stats.clear();
    for (const auto& c : chunks) stats.push_back(stats_for(k, c, ratio));
  };

  if (kind != EstimateKind::kAvg) {
    fill(kind, 0.0);
    return {bilevel_estimate(stats, N), bilevel_variance_estimate(stats, N)};
  }
  fill(EstimateKind::kSum, 0.0);
  const double tx = bilevel_estimate(stats, N);
  fill(EstimateKind::kCount, 0.0);
  const double tc = bilevel_estimate(stats, N);
  if (tc == 0.0) return {0.0, kInf};
  const double ratio = tx / tc;
  fill(EstimateKind::kAvg, ratio);
  return {ratio, bilevel_variance_estimate(stats, N) / (tc * tc)};
}

void finish_snapshot(EstimateSnapshot& snap, double confidence) {
  const Interval ci = confidence_interval(snap.estimate, snap.var_hat, confidence);
  snap.lo = ci.lo;
  snap.hi = ci.hi;
  snap.bounded = ci.bounded;
  snap.error_ratio = error_ratio(snap.estimate, ci);
}

}  // namespace olaraw
