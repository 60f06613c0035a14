#include "olaraw/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "olaraw/error.hpp"

namespace olaraw {

using Clock = std::chrono::steady_clock;

void PipelineConfig::validate() const {
  if (workers < 1) throw Error("need at least one worker");
  if (buffer_capacity < 1) throw Error("buffer capacity must be at least 1");
  if (group_tuples < 1) throw Error("group size must be at least 1");
  if (per_tuple_cost_us < 0 || read_bandwidth_mb_s < 0 || chunk_delay_max_ms < 0)
    throw Error("cost, bandwidth and delay settings must be non-negative");
}

LazyPermutation::LazyPermutation(std::uint64_t seed, std::uint32_t n) : rng_(seed), slots_(n) {
  std::iota(slots_.begin(), slots_.end(), 0u);
}

std::uint32_t LazyPermutation::operator[](std::uint64_t k) {
  const std::uint64_t n = slots_.size();
  if (k >= n) throw Error("permutation index out of range");
  while (fixed_ <= k) {
    const std::uint64_t r = fixed_ + rng_.below(n - fixed_);
    std::swap(slots_[fixed_], slots_[r]);
    ++fixed_;
  }
  return slots_[k];
}

std::uint64_t chunk_seed(std::uint64_t seed, std::uint32_t chunk) {
  return derive_seed(seed, 0x10000000ULL + chunk);
}

void spin_for_us(double us) {
  if (us <= 0.0) return;
  const auto until = Clock::now() + std::chrono::nanoseconds(static_cast<std::int64_t>(us * 1000.0));
  while (Clock::now() < until) {
  }
}

void extract_batch(ExtractTask& task, const RawChunk& chunk, const BoundQuery& query, const PositionFn& position,
                   const ExtractOptions& opts) {
  const Schema& schema = query.schema();
  if (task.M == 0) task.M = chunk.tuples();

  std::vector<std::size_t> wanted(query.columns());
  wanted.insert(wanted.end(), opts.capture.begin(), opts.capture.end());
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

  std::vector<Value> values(schema.arity());
  const bool grouped = query.has_group();
  const bool exact = opts.exact && query.integral();
  if (exact && task.cursor == 0 && task.moments.m == 0) task.exact_valid = true;

  for (std::uint64_t q = 0; q < opts.quota && task.cursor < task.M; ++q) {
    if (opts.deadline && Clock::now() >= *opts.deadline) break;
    const std::uint64_t k = task.cursor;
    const std::uint64_t pos = task.sequential ? k : position((task.start + k) % task.M);
    const std::string_view rec = chunk.record(pos);
    ++task.cursor;

    if (!parse_record(schema, rec, wanted, values)) {
      ++task.rejects;
      if (!opts.capture.empty()) {
        task.rows.insert(task.rows.end(), opts.capture.size(), 0.0);
        task.row_ok.push_back(0);
      }
      continue;
    }
    const bool pass = query.predicate(values);
    const double x = pass ? query.value(values) : 0.0;
    if (opts.cost_us > 0.0 && (pass || !opts.cost_on_match_only)) spin_for_us(opts.cost_us);

    task.moments.add(x, pass ? 1.0 : 0.0);
    if (pass && grouped) {
      auto& g = task.groups[query.group_key(values)];
      g.sx += x;
      g.sxx += x * x;
      g.sc += 1.0;
    }
    if (exact && pass) {
      if (__builtin_add_overflow(task.exact, query.exact_value(values), &task.exact))
        throw EvalError("128-bit accumulator overflow");
    }
    if (!opts.capture.empty()) {
      for (auto c : opts.capture) task.rows.push_back(values[c].f);
      task.row_ok.push_back(1);
    }
  }
}

std::size_t included_prefix(std::span<const SlotView> slots) {
  std::size_t n = 0;
  while (n < slots.size() && slots[n].moments.m > 0) ++n;
  return n;
}

std::vector<ChunkMoments> snapshot_in_order(std::span<const SlotView> slots) {
  const std::size_t n = included_prefix(slots);
  std::vector<ChunkMoments> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(ChunkMoments{slots[k].chunk, slots[k].M, slots[k].moments});
  return out;
}

bool task_satisfied(const WorkerRule& rule, std::uint64_t M, const Moments& mo,
                    const std::map<double, GroupMoments>& groups) {
  if (!rule.grouped) return moments_satisfied(rule.kind, M, mo, rule.target);
  if (mo.m == 0) return false;
  for (const auto& [key, g] : groups) {
    if (!moments_satisfied(rule.kind, M, Moments{mo.m, g.sx, g.sxx, g.sc}, rule.target)) return false;
  }
  return true;
}

Pipeline::Pipeline(const RawFile& file, const ChunkIndex& index, const BoundQuery& query, PipelineConfig config,
                   std::vector<ExtractTask> plan, std::vector<std::size_t> capture, bool exact,
                   std::optional<WorkerRule> rule)
    : file_(file),
      index_(index),
      query_(query),
      config_(config),
      capture_(std::move(capture)),
      exact_(exact),
      rule_(std::move(rule)),
      tasks_(std::move(plan)) {
  config_.validate();
  slots_.resize(tasks_.size());
  acked_.assign(tasks_.size(), false);
  for (std::size_t k = 0; k < tasks_.size(); ++k) {
    auto& t = tasks_[k];
    if (t.chunk >= index_.num_chunks()) throw Error("plan references chunk " + std::to_string(t.chunk));
    t.schedule_pos = k;
    if (t.M == 0) t.M = index_.chunks[t.chunk].tuples;
    publish(k, t);
  }
}

Pipeline::~Pipeline() { stop(); }

void Pipeline::publish(std::size_t pos, const ExtractTask& t) {
  auto& s = slots_[pos];
  s.chunk = t.chunk;
  s.M = t.effective_M();
  s.cursor = t.cursor;
  s.moments = t.moments;
  s.groups = t.groups;
  s.exact = t.exact;
  s.exact_valid = t.exact_valid;
  s.rejects = t.rejects;
}

void Pipeline::start() {
  if (started_) return;
  started_ = true;
  t0_ = Clock::now();
  reader_ = std::thread([this] { reader_main(); });
  for (std::size_t i = 0; i < config_.workers; ++i) workers_.emplace_back([this, i] { worker_main(i); });
}

void Pipeline::stop() {
  {
    std::lock_guard lk(mu_);
    stop_ = true;
  }
  work_cv_.notify_all();
  control_cv_.notify_all();
  join();
}

void Pipeline::join() {
  if (joined_ || !started_) return;
  if (reader_.joinable()) reader_.join();
  for (auto& w : workers_)
    if (w.joinable()) w.join();
  joined_ = true;
}

void Pipeline::fail(std::exception_ptr e) {
  {
    std::lock_guard lk(mu_);
    if (!error_) error_ = e;
    stop_ = true;
    ++events_;
  }
  work_cv_.notify_all();
  control_cv_.notify_all();
}

double Pipeline::elapsed_ms() const {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0_).count();
}

void Pipeline::reader_main() {
  try {
    auto disk_free = Clock::now();
    for (std::size_t pos = 0; pos < tasks_.size(); ++pos) {
      std::uint32_t chunk;
      {
        std::unique_lock lk(mu_);
        work_cv_.wait(lk, [&] {
          if (stop_) return true;
          if (buffer_.size() >= config_.buffer_capacity) return false;
          return !config_.lockstep || unacked_ == 0;
        });
        if (stop_) break;
        chunk = slots_[pos].chunk;
      }
      const auto& info = index_.chunks[chunk];
      if (config_.read_bandwidth_mb_s > 0.0) {
        const double secs = static_cast<double>(info.length) / (config_.read_bandwidth_mb_s * 1e6);
        disk_free = std::max(disk_free, Clock::now()) +
                    std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(secs));
        std::unique_lock lk(mu_);
        if (work_cv_.wait_until(lk, disk_free, [&] { return stop_; })) break;
      }
      RawChunk rc = file_.read_chunk(index_, chunk);
      {
        std::lock_guard lk(mu_);
        buffer_.push_back(Buffered{pos, std::move(rc)});
        slots_[pos].state = SlotState::kBuffered;
        ++chunks_read_;
        bytes_read_ += info.length;
        if (config_.lockstep) ++unacked_;
      }
      work_cv_.notify_all();
    }
  } catch (...) {
    fail(std::current_exception());
  }
  {
    std::lock_guard lk(mu_);
    reader_done_ = true;
    ++events_;
  }
  work_cv_.notify_all();
  control_cv_.notify_all();
}

void Pipeline::worker_main(std::size_t) {
  try {
    for (;;) {
      std::unique_lock lk(mu_);
      ++idle_workers_;
      work_cv_.wait(lk, [&] { return stop_ || !buffer_.empty() || reader_done_; });
      --idle_workers_;
      if (stop_ || buffer_.empty()) break;
      Buffered item = std::move(buffer_.front());
      buffer_.pop_front();
      const std::size_t pos = item.plan_pos;
      ExtractTask task = std::move(tasks_[pos]);
      slots_[pos].state = SlotState::kRunning;
      slots_[pos].started_ms = elapsed_ms();
      lk.unlock();
      work_cv_.notify_all();

      if (config_.chunk_delay_max_ms > 0.0) {
        Rng rng(derive_seed(config_.seed, 0x20000000ULL + task.chunk));
        const double ms = rng.uniform01() * config_.chunk_delay_max_ms;
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
      }
      if (task.M != item.chunk.tuples()) throw FormatError("chunk tuple count changed since indexing");

      std::optional<LazyPermutation> perm;
      if (!task.sequential) perm.emplace(task.perm_seed, static_cast<std::uint32_t>(task.M));
      const PositionFn position = [&](std::uint64_t k) { return (*perm)[k]; };
      ExtractOptions opts;
      opts.quota = config_.group_tuples;
      opts.capture = capture_;
      opts.exact = exact_;
      opts.cost_us = config_.per_tuple_cost_us;
      opts.cost_on_match_only = config_.cost_on_match_only;

      bool stopped = false;
      while (!task.exhausted()) {
        extract_batch(task, item.chunk, query_, position, opts);
        bool finalize;
        {
          std::lock_guard g(mu_);
          publish(pos, task);
          stopped = stop_;
          finalize = slots_[pos].finalize_requested;
        }
        if (stopped || finalize) break;
        if (rule_ && task_satisfied(*rule_, task.effective_M(), task.moments, task.groups)) break;
      }

      lk.lock();
      publish(pos, task);
      tasks_[pos] = std::move(task);
      slots_[pos].state = SlotState::kDone;
      slots_[pos].finished_ms = elapsed_ms();
      ++events_;
      control_cv_.notify_all();
      if (config_.lockstep) work_cv_.wait(lk, [&] { return stop_ || acked_[pos]; });
      if (stopped || stop_) break;
    }
  } catch (...) {
    fail(std::current_exception());
  }
  {
    std::lock_guard lk(mu_);
    ++exited_workers_;
    ++events_;
  }
  control_cv_.notify_all();
  work_cv_.notify_all();
}

std::vector<SlotView> Pipeline::views() const {
  std::lock_guard lk(mu_);
  return slots_;
}

ResourceSnapshot Pipeline::resources() const {
  std::lock_guard lk(mu_);
  ResourceSnapshot r;
  r.buffered_chunks = buffer_.size();
  r.idle_workers = idle_workers_;
  r.regime = classify_regime(r.idle_workers, r.buffered_chunks);
  r.timestamp_ms = started_ ? elapsed_ms() : 0.0;
  return r;
}

void Pipeline::request_finalize(std::size_t plan_pos) {
  std::lock_guard lk(mu_);
  slots_.at(plan_pos).finalize_requested = true;
}

void Pipeline::acknowledge(std::size_t plan_pos) {
  {
    std::lock_guard lk(mu_);
    if (!acked_.at(plan_pos) && unacked_ > 0) --unacked_;
    acked_.at(plan_pos) = true;
  }
  work_cv_.notify_all();
}

bool Pipeline::wait_event(Clock::time_point deadline) {
  std::unique_lock lk(mu_);
  const bool woke = control_cv_.wait_until(lk, deadline, [&] { return events_ != events_seen_; });
  events_seen_ = events_;
  return woke;
}

bool Pipeline::done() const {
  std::lock_guard lk(mu_);
  return exited_workers_ == config_.workers && reader_done_;
}

std::exception_ptr Pipeline::error() const {
  std::lock_guard lk(mu_);
  return error_;
}

std::uint64_t Pipeline::chunks_read() const {
  std::lock_guard lk(mu_);
  return chunks_read_;
}

std::uint64_t Pipeline::bytes_read() const {
  std::lock_guard lk(mu_);
  return bytes_read_;
}

}  // namespace olaraw
