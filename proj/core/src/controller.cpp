#include "olaraw/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "olaraw/error.hpp"

namespace olaraw {

using Clock = std::chrono::steady_clock;

Dataset open_dataset(const std::filesystem::path& path, std::optional<std::uint64_t> target_chunk_bytes) {
  Dataset d;
  d.path = path;
  d.schema = Schema::load(schema_path_for(path));
  const auto idx = index_path_for(path);
  if (std::filesystem::exists(idx) && !target_chunk_bytes) {
    d.index = ChunkIndex::load(idx);
    if (d.index.file_size != std::filesystem::file_size(path))
      throw FormatError("index " + idx.string() + " is stale: file size changed");
  } else {
    const auto size = std::filesystem::file_size(path);
    const auto target = target_chunk_bytes ? *target_chunk_bytes : std::max<std::uint64_t>(1, (size + 63) / 64);
    d.index = build_chunk_index(path, d.schema, target);
    d.index.save(idx);
  }
  d.file = std::make_unique<RawFile>(path, d.schema);
  return d;
}

std::string_view to_string(RunState s) {
  switch (s) {
    case RunState::kRunning: return "RUNNING";
    case RunState::kSatisfied: return "SATISFIED";
    case RunState::kStoppedByUser: return "STOPPED_BY_USER";
    case RunState::kExactComplete: return "EXACT_COMPLETE";
    case RunState::kExhausted: return "EXHAUSTED";
    case RunState::kFailed: return "FAILED";
  }
  return "?";
}

bool is_terminal(RunState s) { return s != RunState::kRunning; }

namespace {

EstimateKind estimate_kind(AggregateKind k) {
  switch (k) {
    case AggregateKind::kSum: return EstimateKind::kSum;
    case AggregateKind::kCount: return EstimateKind::kCount;
    case AggregateKind::kAvg: return EstimateKind::kAvg;
  }
  return EstimateKind::kSum;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Item {
  std::uint32_t chunk = 0;
  std::optional<std::size_t> plan_pos;  // pipeline plan index when read from disk
  std::optional<SlotView> memory;       // retained sample, when the synopsis has one
  std::uint64_t initial_cursor = 0;
};

bool slot_complete(const SlotView& v) { return v.cursor >= v.M + v.rejects; }

class Estimator {
 public:
  Estimator(const AggregateQuery& q, StrategyKind strategy, bool reorder, std::size_t N)
      : kind_(estimate_kind(q.kind)),
        grouped_(q.group_column.has_value()),
        strategy_(strategy),
        reorder_(reorder),
        N_(N),
        confidence_(q.confidence) {}

  /// Builds the snapshots for the current views (estimation order).
  std::vector<EstimateSnapshot> evaluate(const std::vector<SlotView>& views, std::vector<std::uint32_t>& included,
                                         std::optional<Int128> exact_total) const {
    std::vector<const SlotView*> use;
    if (strategy_ == StrategyKind::kChunk || strategy_ == StrategyKind::kExt) {
      if (reorder_) {
        for (const auto& v : views) {
          if (!(v.state == SlotState::kDone && slot_complete(v))) break;
          use.push_back(&v);
        }
      } else {
        for (const auto& v : views)
          if (v.state == SlotState::kDone && slot_complete(v)) use.push_back(&v);
        std::stable_sort(use.begin(), use.end(),
                         [](const SlotView* a, const SlotView* b) { return a->finished_ms < b->finished_ms; });
      }
    } else {
      const auto n = included_prefix(views);
      for (std::size_t k = 0; k < n; ++k) use.push_back(&views[k]);
    }
    included.clear();
    std::uint64_t tuples = 0;
    for (const auto* v : use) {
      included.push_back(v->chunk);
      tuples += v->moments.m;
    }

    std::vector<std::optional<double>> keys;
    if (grouped_) {
      std::set<double> seen;
      for (const auto* v : use)
        for (const auto& [k, g] : v->groups) seen.insert(k);
      for (double k : seen) keys.emplace_back(k);
      if (keys.empty()) keys.emplace_back(std::nullopt);
    } else {
      keys.emplace_back(std::nullopt);
    }

    std::vector<EstimateSnapshot> out;
    for (const auto& key : keys) {
      EstimateSnapshot s;
      s.group = key;
      s.included = included;
      s.n_chunks = use.size();
      s.tuples = tuples;
      if (strategy_ == StrategyKind::kExt) {
        const bool all = use.size() == N_;
        if (all && !grouped_ && exact_total && kind_ != EstimateKind::kAvg) {
          s.estimate = static_cast<double>(*exact_total);
          s.var_hat = 0.0;
        } else if (all) {
          fill(s, use, key);
          s.var_hat = 0.0;
        } else {
          s.estimate = kNaN;
          s.var_hat = std::numeric_limits<double>::infinity();
        }
        finish_snapshot(s, confidence_);
        if (!all) {
          s.error_ratio = std::numeric_limits<double>::infinity();
        }
      } else if (use.empty()) {
        s.estimate = kNaN;
        s.var_hat = std::numeric_limits<double>::infinity();
        finish_snapshot(s, confidence_);
        s.error_ratio = std::numeric_limits<double>::infinity();
      } else {
        fill(s, use, key);
        finish_snapshot(s, confidence_);
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  bool chunk_satisfied(const SlotView& v, const LocalTarget& target) const {
    if (slot_complete(v)) return true;
    WorkerRule rule{kind_, target, grouped_};
    return task_satisfied(rule, v.M, v.moments, v.groups);
  }

  /// Variance of chunk j's estimate under this query, for the synopsis.
  double chunk_variance_of(const SlotView& v) const {
    const ChunkMoments c{v.chunk, v.M, v.moments};
    double var;
    if (kind_ == EstimateKind::kAvg) {
      const double r = v.moments.sc > 0 ? v.moments.sx / v.moments.sc : 0.0;
      var = chunk_variance(stats_for(kind_, c, r));
    } else {
      var = chunk_variance(stats_for(kind_, c));
    }
    return std::isfinite(var) ? var : 0.0;
  }

 private:
  void fill(EstimateSnapshot& s, const std::vector<const SlotView*>& use, const std::optional<double>& key) const {
    std::vector<ChunkMoments> cm;
    cm.reserve(use.size());
    for (const auto* v : use) {
      Moments mo = v->moments;
      if (key) {
        auto it = v->groups.find(*key);
        mo.sx = it == v->groups.end() ? 0.0 : it->second.sx;
        mo.sxx = it == v->groups.end() ? 0.0 : it->second.sxx;
        mo.sc = it == v->groups.end() ? 0.0 : it->second.sc;
      }
      cm.push_back(ChunkMoments{v->chunk, v->M, mo});
    }
    const auto pe = estimate_from_moments(kind_, cm, N_);
    s.estimate = pe.tau_hat;
    s.var_hat = pe.var_hat;
  }

  EstimateKind kind_;
  bool grouped_;
  StrategyKind strategy_;
  bool reorder_;
  std::size_t N_;
  double confidence_;
};

SlotView memory_view(const ExtractTask& t) {
  SlotView v;
  v.chunk = t.chunk;
  v.state = SlotState::kDone;
  v.M = t.effective_M();
  v.cursor = t.cursor;
  v.moments = t.moments;
  v.groups = t.groups;
  v.rejects = t.rejects;
  v.from_disk = false;
  v.started_ms = v.finished_ms = 0.0;
  return v;
}

bool all_satisfied(const std::vector<EstimateSnapshot>& snaps, double epsilon) {
  if (snaps.empty()) return false;
  for (const auto& s : snaps)
    if (!global_stop(s, epsilon)) return false;
  return true;
}

}  // namespace

RunResult run_query(const Dataset& data, const AggregateQuery& query, const RunOptions& options) {
  RunResult result;
  const auto t0 = Clock::now();
  auto now_ms = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); };
  result.seed = options.pipeline.seed;

  const StrategyKind strategy = options.strategy;
  const bool ext = strategy == StrategyKind::kExt;
  const std::size_t N = data.num_chunks();
  query.validate();
  options.pipeline.validate();
  const BoundQuery bound(query, data.schema);
  const Estimator est(query, strategy, options.reorder, N);
  LocalTarget target{query.epsilon, query.confidence, std::nullopt};

  std::vector<std::uint32_t> schedule(N);
  if (ext) {
    for (std::uint32_t j = 0; j < N; ++j) schedule[j] = j;
  } else {
    schedule = chunk_permutation(derive_seed(options.pipeline.seed, 1), N);
  }

  // Items in estimation order plus the pipeline plan.
  std::vector<Item> items;
  std::vector<ExtractTask> plan;
  std::vector<std::size_t> capture;
  Synopsis* syn = ext ? nullptr : options.synopsis;
  auto fresh_task = [&](std::uint32_t j) {
    ExtractTask t;
    t.chunk = j;
    t.M = data.index.chunks[j].tuples;
    t.perm_seed = chunk_seed(options.pipeline.seed, j);
    t.sequential = ext;
    return t;
  };

  if (syn) {
    auto mode = syn->can_answer(query);
    if (syn->num_chunks() != N && mode != SynopsisAnswer::kRebuild) mode = SynopsisAnswer::kRebuild;
    result.synopsis_mode = mode;
    if (mode == SynopsisAnswer::kRebuild) syn->reset(query.referenced_columns(), to_sql(query), N);
    capture = syn->column_positions(data.schema);

    std::map<std::uint32_t, ExtractTask> memory;
    std::vector<std::uint32_t> unsatisfied;
    for (const auto& c : syn->chunks()) {
      auto t = syn->task_for(c, bound);
      const auto v = memory_view(t);
      const bool ok = samples_within_chunks(strategy) && strategy != StrategyKind::kHolistic
                          ? est.chunk_satisfied(v, target)
                          : slot_complete(v);
      if (!ok) unsatisfied.push_back(c.chunk);
      memory.emplace(c.chunk, std::move(t));
    }
    const auto access = syn->plan_access_order(mode, unsatisfied, schedule);
    std::map<std::uint32_t, std::size_t> pos_of;
    for (auto j : access.disk_order) {
      pos_of[j] = plan.size();
      auto it = memory.find(j);
      plan.push_back(it != memory.end() ? it->second : fresh_task(j));
    }
    for (auto j : access.estimation_order) {
      Item it;
      it.chunk = j;
      auto m = memory.find(j);
      if (m != memory.end()) {
        it.memory = memory_view(m->second);
        it.initial_cursor = m->second.cursor;
      }
      auto p = pos_of.find(j);
      if (p != pos_of.end()) it.plan_pos = p->second;
      items.push_back(std::move(it));
    }
  } else {
    for (auto j : schedule) {
      Item it;
      it.chunk = j;
      it.plan_pos = plan.size();
      items.push_back(it);
      plan.push_back(fresh_task(j));
    }
  }
  for (const auto& it : items) result.schedule.push_back(it.chunk);

  // Views in estimation order; pipeline items override memory ones.
  auto merge_views = [&](const std::vector<SlotView>* pv) {
    std::vector<SlotView> views;
    views.reserve(items.size());
    for (const auto& it : items) {
      if (it.plan_pos && pv) {
        views.push_back((*pv)[*it.plan_pos]);
      } else if (it.memory) {
        views.push_back(*it.memory);
      } else {
        SlotView v;
        v.chunk = it.chunk;
        v.M = data.index.chunks[it.chunk].tuples;
        views.push_back(v);
      }
    }
    return views;
  };

  std::vector<std::uint32_t> included;
  std::uint64_t reported = 0;
  EstimateSnapshot last_reported;
  bool have_reported = false;
  auto emit = [&](std::vector<EstimateSnapshot>& snaps, bool final) {
    for (auto& s : snaps) {
      if (have_reported && !final && s.n_chunks == last_reported.n_chunks && s.tuples == last_reported.tuples &&
          s.group == last_reported.group)
        s.stale = true;
      s.final = final;
      result.trace.push_back(s);
      if (options.on_snapshot) options.on_snapshot(s);
      last_reported = s;
      have_reported = true;
    }
    ++reported;
  };

  auto evaluation_of = [&](const std::vector<SlotView>& views, std::vector<EstimateSnapshot>& snaps,
                           double ts, const ResourceSnapshot& res, std::uint64_t chunks_read,
                           std::uint64_t bytes_read) {
    std::optional<Int128> exact_total;
    if (ext && bound.integral()) {
      Int128 sum = 0;
      bool ok = true;
      for (const auto& v : views) {
        ok = ok && v.exact_valid;
        if (__builtin_add_overflow(sum, v.exact, &sum)) throw EvalError("128-bit accumulator overflow");
      }
      if (ok) exact_total = sum;
    }
    snaps = est.evaluate(views, included, exact_total);
    Evaluation e;
    e.timestamp_ms = ts;
    for (auto& s : snaps) {
      s.timestamp_ms = ts;
      s.chunks_read = chunks_read;
      s.bytes_read = bytes_read;
      s.regime = res.regime;
      for (const auto& v : views) s.tainted = s.tainted || v.rejects > 0;
    }
    for (const auto& v : views) {
      if (v.M + v.rejects > 0) e.processed_chunks += static_cast<double>(v.cursor) / static_cast<double>(v.M + v.rejects);
      if (v.state == SlotState::kDone && slot_complete(v)) ++e.completed_chunks;
    }
    e.snapshots = snaps;
    e.satisfied = !ext && all_satisfied(snaps, query.epsilon);
    ++result.evaluations;
    if (options.on_evaluation) options.on_evaluation(e);
    return e;
  };

  auto finish = [&](RunState state, const std::vector<SlotView>& views, std::vector<EstimateSnapshot>& snaps) {
    result.state = state;
    emit(snaps, true);
    result.final = snaps;
    result.chunks.clear();
    for (std::size_t k = 0; k < items.size(); ++k) {
      ChunkOutcome o;
      o.chunk = views[k].chunk;
      o.M = views[k].M;
      o.m = views[k].moments.m;
      o.from_disk = items[k].plan_pos.has_value() && views[k].state != SlotState::kPending;
      o.finalized = views[k].state == SlotState::kDone && !slot_complete(views[k]);
      o.settled = views[k].state == SlotState::kDone || !items[k].plan_pos;
      result.chunks.push_back(o);
      result.rejects += views[k].rejects;
      if (items[k].plan_pos && views[k].cursor > items[k].initial_cursor)
        result.tuples_extracted += views[k].cursor - items[k].initial_cursor;
    }
    if (ext && bound.integral()) {
      Int128 sum = 0;
      bool ok = true;
      for (const auto& v : views) {
        ok = ok && v.exact_valid && slot_complete(v);
        sum += v.exact;
      }
      if (ok) result.exact = sum;
    }
    result.elapsed_ms = now_ms();
  };

  // A synopsis may already answer the query.
  if (syn && !items.empty()) {
    auto views = merge_views(nullptr);
    std::vector<EstimateSnapshot> snaps;
    ResourceSnapshot idle{0, options.pipeline.workers, Regime::kIoBound, 0.0};
    auto e = evaluation_of(views, snaps, now_ms(), idle, 0, 0);
    const bool everything = std::all_of(views.begin(), views.end(), [](const SlotView& v) {
      return v.moments.m > 0 && slot_complete(v);
    });
    if (e.satisfied || everything || plan.empty()) {
      RunState st = everything && views.size() == N ? RunState::kExactComplete
                    : e.satisfied                   ? RunState::kSatisfied
                                                    : RunState::kExhausted;
      finish(st, views, snaps);
      for (std::size_t k = 0; k < items.size(); ++k) {
        if (items[k].memory) {
          if (auto* c = syn->find(items[k].chunk)) {
            SynopsisChunk copy = *c;
            copy.variance = est.chunk_variance_of(views[k]);
            syn->extend_chunk(std::move(copy));
          }
        }
      }
      return result;
    }
  }

  std::optional<WorkerRule> rule;
  if (strategy == StrategyKind::kSinglePass)
    rule = WorkerRule{estimate_kind(query.kind), target, query.group_column.has_value()};

  Pipeline pipe(*data.file, data.index, bound, options.pipeline, plan, capture, ext, rule);
  TevalController teval(query.delta_ms, options.t_min_ms);
  struct Local {
    std::optional<TevalController> clock;
    double next_check_ms = 0.0;
    double satisfied_ms = -1.0;
    bool settled = false;  // finish time folded into calibration
  };
  std::vector<Local> local(plan.size());
  std::vector<bool> acked(plan.size(), false);

  pipe.start();
  double next_report = query.delta_ms;
  std::vector<SlotView> views;
  std::vector<EstimateSnapshot> snaps;
  RunState terminal = RunState::kRunning;

  try {
    for (;;) {
      const double now = now_ms();
      double wake = next_report;
      if (!ext && !options.pipeline.lockstep) wake = std::min(wake, now + teval.t_eval());
      if (strategy == StrategyKind::kResourceAware) {
        for (const auto& l : local)
          if (l.clock && !l.settled) wake = std::min(wake, l.next_check_ms);
      }
      if (wake > now) pipe.wait_event(t0 + std::chrono::duration_cast<Clock::duration>(
                                                std::chrono::duration<double, std::milli>(wake)));
      if (auto err = pipe.error()) std::rethrow_exception(err);

      const double ts = now_ms();
      auto pv = pipe.views();
      const auto res = pipe.resources();

      for (std::size_t p = 0; p < pv.size(); ++p) {
        auto& l = local[p];
        const auto& v = pv[p];
        if (v.state == SlotState::kRunning && !l.clock) {
          l.clock = teval;
          l.next_check_ms = ts;
        }
        if (strategy == StrategyKind::kResourceAware && v.state == SlotState::kRunning && !v.finalize_requested &&
            ts >= l.next_check_ms) {
          const bool sat = est.chunk_satisfied(v, target);
          if (sat && l.satisfied_ms < 0) l.satisfied_ms = ts;
          const auto action = chunk_decision(strategy, sat, slot_complete(v), res);
          l.clock->tick_update(sat, v.moments.m > 0, res);
          // without a first estimate there is nothing to decay yet; look again soon
          l.next_check_ms = ts + (v.moments.m > 0 ? l.clock->t_eval() : l.clock->t_min());
          if (action == ChunkAction::kFinalize) {
            pipe.request_finalize(p);
            teval.finalize(l.satisfied_ms - std::max(0.0, v.started_ms));
            l.settled = true;
          }
        }
        if (v.state == SlotState::kDone && !l.settled) {
          const double dur = v.finished_ms - std::max(0.0, v.started_ms);
          if (slot_complete(v)) teval.record_full_chunk_time(dur);
          if (strategy != StrategyKind::kResourceAware || !slot_complete(v)) teval.finalize(dur);
          l.settled = true;
        }
      }

      views = merge_views(&pv);
      auto e = evaluation_of(views, snaps, ts, res, pipe.chunks_read(), pipe.bytes_read());
      const bool drained = pipe.done();
      const bool everything = views.size() == N && std::all_of(views.begin(), views.end(), [](const SlotView& v) {
        return v.state == SlotState::kDone && slot_complete(v);
      });

      // lockstep runs decide only when a chunk has just settled, so the
      // outcome does not depend on how far the chunk in flight has got
      bool settle_point = !options.pipeline.lockstep || drained;
      for (std::size_t p = 0; p < pv.size() && !settle_point; ++p)
        settle_point = pv[p].state == SlotState::kDone && !acked[p];

      if (options.stop_requested && options.stop_requested->load()) terminal = RunState::kStoppedByUser;
      else if (everything) terminal = RunState::kExactComplete;
      else if (e.satisfied && settle_point) terminal = RunState::kSatisfied;
      else if (drained) terminal = RunState::kExhausted;

      if (options.pipeline.lockstep) {
        for (std::size_t p = 0; p < pv.size(); ++p) {
          if (pv[p].state == SlotState::kDone && !acked[p] && terminal == RunState::kRunning) {
            pipe.acknowledge(p);
            acked[p] = true;
          }
        }
      }
      if (terminal != RunState::kRunning) break;
      if (ts >= next_report) {
        emit(snaps, false);
        next_report += query.delta_ms;
        if (next_report <= ts) next_report = ts + query.delta_ms;
      }
    }
  } catch (const std::exception& ex) {
    pipe.stop();
    result.error = ex.what();
    if (views.empty()) views = merge_views(nullptr);
    if (snaps.empty()) {
      EstimateSnapshot s;
      s.estimate = kNaN;
      s.var_hat = std::numeric_limits<double>::infinity();
      finish_snapshot(s, query.confidence);
      snaps.push_back(s);
    }
    result.chunks_read = pipe.chunks_read();
    result.bytes_read = pipe.bytes_read();
    result.t_max_ms = teval.t_max();
    finish(RunState::kFailed, views, snaps);
    return result;
  }

  pipe.stop();
  result.chunks_read = pipe.chunks_read();
  result.bytes_read = pipe.bytes_read();
  result.t_max_ms = teval.t_max();
  finish(terminal, views, snaps);

  if (syn) {
    // Keep exactly the samples behind the final estimate.
    auto& tasks = pipe.tasks();
    std::set<std::uint32_t> in_estimate(included.begin(), included.end());
    for (std::size_t k = 0; k < items.size(); ++k) {
      const auto& v = views[k];
      if (!in_estimate.count(v.chunk) || v.cursor == 0) continue;
      SynopsisChunk c;
      c.chunk = v.chunk;
      c.M = v.M + v.rejects;
      c.variance = est.chunk_variance_of(v);
      const SynopsisChunk* present = syn->find(v.chunk);
      if (items[k].plan_pos) {
        auto& t = tasks[*items[k].plan_pos];
        const std::uint64_t keep = std::min<std::uint64_t>(v.cursor, t.row_ok.size());
        c.seed = t.perm_seed;
        c.start = t.start;
        c.length = keep;
        c.rows.assign(t.rows.begin(), t.rows.begin() + static_cast<std::ptrdiff_t>(keep * capture.size()));
        c.ok.assign(t.row_ok.begin(), t.row_ok.begin() + static_cast<std::ptrdiff_t>(keep));
      } else if (present) {
        c = *present;
        c.variance = est.chunk_variance_of(v);
      } else {
        continue;
      }
      if (c.length == 0) continue;
      if (present) {
        if (c.length >= present->length) syn->extend_chunk(std::move(c));
      } else {
        syn->insert_chunk(std::move(c));
      }
    }
  }
  return result;
}

QueryRun::QueryRun(std::string id, const Dataset& data, AggregateQuery query, RunOptions options,
                   std::mutex* synopsis_mutex)
    : id_(std::move(id)),
      data_(data),
      query_(std::move(query)),
      options_(std::move(options)),
      synopsis_mutex_(synopsis_mutex) {
  thread_ = std::thread([this] { main(); });
}

QueryRun::~QueryRun() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

void QueryRun::main() {
  RunOptions opts = options_;
  opts.stop_requested = &stop_;
  opts.on_snapshot = [this](const EstimateSnapshot& s) {
    {
      std::lock_guard lk(mu_);
      snapshots_.push_back(s);
    }
    cv_.notify_all();
  };
  std::optional<Synopsis> local;
  if (options_.synopsis) {
    std::unique_lock lk(*synopsis_mutex_);
    local = *options_.synopsis;
    opts.synopsis = &*local;
  }
  RunResult r;
  try {
    r = run_query(data_, query_, opts);
  } catch (const std::exception& e) {
    r.state = RunState::kFailed;
    r.error = e.what();
  }
  if (local && r.state != RunState::kFailed) {
    std::unique_lock lk(*synopsis_mutex_);
    *options_.synopsis = std::move(*local);
  }
  {
    std::lock_guard lk(mu_);
    state_ = r.state;
    result_ = std::move(r);
  }
  cv_.notify_all();
}

RunState QueryRun::state() const {
  std::lock_guard lk(mu_);
  return state_;
}

RunState QueryRun::stop() {
  {
    std::lock_guard lk(mu_);
    if (is_terminal(state_)) return state_;
  }
  stop_ = true;
  std::unique_lock lk(mu_);
  cv_.wait(lk, [&] { return is_terminal(state_); });
  return state_;
}

std::vector<EstimateSnapshot> QueryRun::wait_snapshots(std::size_t from, int timeout_ms) const {
  std::unique_lock lk(mu_);
  cv_.wait_for(lk, std::chrono::milliseconds(timeout_ms),
               [&] { return snapshots_.size() > from || is_terminal(state_); });
  if (from >= snapshots_.size()) return {};
  return {snapshots_.begin() + static_cast<std::ptrdiff_t>(from), snapshots_.end()};
}

std::size_t QueryRun::snapshot_count() const {
  std::lock_guard lk(mu_);
  return snapshots_.size();
}

std::optional<RunResult> QueryRun::result() const {
  std::lock_guard lk(mu_);
  return result_;
}

}  // namespace olaraw
