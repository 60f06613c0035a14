#include "olaraw/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "olaraw/error.hpp"

namespace olaraw {

std::string_view to_token(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kExt: return "ext";
    case StrategyKind::kChunk: return "chunk";
    case StrategyKind::kHolistic: return "holistic";
    case StrategyKind::kSinglePass: return "singlepass";
    case StrategyKind::kResourceAware: return "resource";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view token) {
  for (auto k : {StrategyKind::kExt, StrategyKind::kChunk, StrategyKind::kHolistic, StrategyKind::kSinglePass,
                 StrategyKind::kResourceAware}) {
    if (token == to_token(k)) return k;
  }
  throw Error("unknown strategy '" + std::string(token) + "' (expected ext|chunk|holistic|singlepass|resource)");
}

bool samples_within_chunks(StrategyKind kind) {
  return kind == StrategyKind::kHolistic || kind == StrategyKind::kSinglePass ||
         kind == StrategyKind::kResourceAware;
}

Regime classify_regime(std::size_t idle_workers, std::size_t buffered_chunks) {
  return idle_workers >= buffered_chunks ? Regime::kIoBound : Regime::kCpuBound;
}

bool locally_satisfied(const ChunkStats& s, const LocalTarget& target) {
  if (s.m == 0) return false;
  if (!local_chunk_interval(s, target.confidence).satisfied(target.epsilon)) return false;
  if (target.var_max && chunk_variance(s) > *target.var_max) return false;
  return true;
}

bool moments_satisfied(EstimateKind kind, std::uint64_t M, const Moments& mo, const LocalTarget& target) {
  if (mo.m == 0) return false;
  if (mo.m >= M) return true;
  const ChunkMoments c{0, M, mo};
  if (kind != EstimateKind::kAvg) return locally_satisfied(stats_for(kind, c), target);
  if (mo.sc == 0.0) return false;
  const double ratio = mo.sx / mo.sc;
  const double count_hat = static_cast<double>(M) / static_cast<double>(mo.m) * mo.sc;
  const double v = chunk_variance(stats_for(kind, c, ratio)) / (count_hat * count_hat);
  if (!std::isfinite(v)) return false;
  if (target.var_max && v > *target.var_max) return false;
  const LocalInterval li{ratio, v > 0.0 ? z_value(target.confidence) * std::sqrt(v) : 0.0};
  return li.satisfied(target.epsilon);
}

ChunkAction chunk_decision(StrategyKind kind, bool satisfied, bool exhausted, const ResourceSnapshot& r) {
  if (exhausted) return ChunkAction::kFinalize;
  switch (kind) {
    case StrategyKind::kExt:
    case StrategyKind::kChunk:
    case StrategyKind::kHolistic:
      return ChunkAction::kContinue;
    case StrategyKind::kSinglePass:
      return satisfied ? ChunkAction::kFinalize : ChunkAction::kContinue;
    case StrategyKind::kResourceAware:
      if (!satisfied) return ChunkAction::kContinue;
      if (r.regime == Regime::kCpuBound) return ChunkAction::kFinalize;
      return r.buffered_chunks > 0 && r.idle_workers == 0 ? ChunkAction::kFinalize : ChunkAction::kContinue;
  }
  return ChunkAction::kContinue;
}

ChunkAction chunk_decision(StrategyKind kind, const ChunkStats& s, const LocalTarget& target,
                           const ResourceSnapshot& r) {
  return chunk_decision(kind, locally_satisfied(s, target), s.m >= s.M, r);
}

TevalController::TevalController(double delta_ms, double t_min_ms)
    : delta_ms_(delta_ms), t_min_(t_min_ms), t_max_(std::max(delta_ms, t_min_ms)), t_eval_(t_max_) {
  if (!(t_min_ms > 0.0)) throw Error("t_min must be positive");
}

void TevalController::clamp() { t_eval_ = std::clamp(t_eval_, t_min_, t_max_); }

void TevalController::tick_update(bool satisfied, bool first_estimate, const ResourceSnapshot& r) {
  const bool halve = r.regime == Regime::kIoBound ? satisfied : first_estimate;
  if (halve) t_eval_ /= 2.0;
  clamp();
}

void TevalController::record_full_chunk_time(double ms) {
  ++chunk_time_count_;
  chunk_time_mean_ += (ms - chunk_time_mean_) / static_cast<double>(chunk_time_count_);
  t_max_ = std::max(t_min_, std::min(delta_ms_, chunk_time_mean_));
  clamp();
}

void TevalController::finalize(double time_to_satisfaction_ms) {
  ++calibration_count_;
  calibration_mean_ += (time_to_satisfaction_ms - calibration_mean_) / static_cast<double>(calibration_count_);
  t_eval_ = calibration_mean_;
  clamp();
}

bool global_stop(const EstimateSnapshot& snap, double epsilon, bool exhausted) {
  if (exhausted) return true;
  if (!snap.bounded || !std::isfinite(snap.var_hat)) return false;
  const double half = (snap.hi - snap.lo) / 2.0;
  if (half == 0.0) return true;
  if (std::fabs(snap.estimate) < 1e-12) return false;
  return half <= epsilon * std::fabs(snap.estimate);
}

std::vector<std::uint32_t> chunk_reorder_barrier(std::span<const std::uint32_t> completed,
                                                 std::span<const std::uint32_t> schedule) {
  std::unordered_set<std::uint32_t> done(completed.begin(), completed.end());
  std::vector<std::uint32_t> prefix;
  for (auto j : schedule) {
    if (!done.count(j)) break;
    prefix.push_back(j);
  }
  return prefix;
}

}  // namespace olaraw
