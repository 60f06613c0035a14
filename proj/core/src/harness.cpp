#include "olaraw/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "olaraw/error.hpp"
#include "olaraw/estimator.hpp"

namespace olaraw {

namespace {

struct Field {
  double f = 0.0;
  std::int64_t i = 0;
  bool integer = false;
};

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool decode_text_field(const Column& col, std::string_view text, Field& out) {
  const std::string s(strip(text));
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  if (col.type == ColumnType::kInt64) {
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out.i = v;
    out.f = static_cast<double>(v);
    out.integer = true;
    return true;
  }
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  out.f = v;
  out.integer = false;
  return true;
}

template <class T>
T read_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

void decode_binary(const Column& col, const unsigned char* p, Field& out) {
  if (col.type == ColumnType::kInt64) {
    switch (col.width) {
      case 1: out.i = read_le<std::int8_t>(p); break;
      case 2: out.i = read_le<std::int16_t>(p); break;
      case 4: out.i = read_le<std::int32_t>(p); break;
      default: out.i = read_le<std::int64_t>(p); break;
    }
    out.f = static_cast<double>(out.i);
    out.integer = true;
  } else {
    out.f = col.width == 4 ? static_cast<double>(read_le<float>(p)) : read_le<double>(p);
    out.integer = false;
  }
}

class TreeEval {
 public:
  TreeEval(const AggregateQuery& q, const Schema& schema) : q_(q), schema_(schema) {}

  double num(const Expr& e, const std::vector<Field>& t) const {
    switch (e.op) {
      case Expr::Op::kNumber: return e.number;
      case Expr::Op::kColumn: return t[pos(e.column)].f;
      case Expr::Op::kAdd: return num(*e.lhs, t) + num(*e.rhs, t);
      case Expr::Op::kSub: return num(*e.lhs, t) - num(*e.rhs, t);
      case Expr::Op::kMul: return num(*e.lhs, t) * num(*e.rhs, t);
      case Expr::Op::kNeg: return -num(*e.lhs, t);
    }
    return 0.0;
  }

  Int128 exact(const Expr& e, const std::vector<Field>& t) const {
    Int128 a, b, r;
    switch (e.op) {
      case Expr::Op::kNumber: return static_cast<Int128>(static_cast<std::int64_t>(e.number));
      case Expr::Op::kColumn: return t[pos(e.column)].i;
      case Expr::Op::kNeg: return -exact(*e.lhs, t);
      default: break;
    }
    a = exact(*e.lhs, t);
    b = exact(*e.rhs, t);
    bool overflow = false;
    if (e.op == Expr::Op::kAdd) overflow = __builtin_add_overflow(a, b, &r);
    else if (e.op == Expr::Op::kSub) overflow = __builtin_sub_overflow(a, b, &r);
    else overflow = __builtin_mul_overflow(a, b, &r);
    if (overflow) throw EvalError("oracle: 128-bit overflow");
    return r;
  }

  bool integral(const Expr& e) const {
    switch (e.op) {
      case Expr::Op::kNumber: return e.integral_literal;
      case Expr::Op::kColumn: return schema_.columns()[pos(e.column)].type == ColumnType::kInt64;
      case Expr::Op::kNeg: return integral(*e.lhs);
      default: return integral(*e.lhs) && integral(*e.rhs);
    }
  }

  bool holds(const Pred* p, const std::vector<Field>& t) const {
    if (!p) return true;
    switch (p->kind) {
      case Pred::Kind::kAnd: return holds(p->lhs.get(), t) && holds(p->rhs.get(), t);
      case Pred::Kind::kOr: return holds(p->lhs.get(), t) || holds(p->rhs.get(), t);
      case Pred::Kind::kBetween: {
        const double v = num(*p->a, t);
        return num(*p->b, t) <= v && v <= num(*p->c, t);
      }
      case Pred::Kind::kCompare: {
        const double a = num(*p->a, t), b = num(*p->b, t);
        switch (p->cmp) {
          case CompareOp::kLt: return a < b;
          case CompareOp::kLe: return a <= b;
          case CompareOp::kGt: return a > b;
          case CompareOp::kGe: return a >= b;
          case CompareOp::kEq: return a == b;
          case CompareOp::kNe: return a != b;
        }
      }
    }
    return false;
  }

  std::size_t pos(const std::string& name) const {
    auto p = schema_.index_of(name);
    if (!p) throw SchemaError("oracle: unknown column " + name);
    return *p;
  }

 private:
  const AggregateQuery& q_;
  const Schema& schema_;
};

struct Acc {
  long double sum = 0.0L;
  Int128 exact = 0;
  std::uint64_t count = 0;
};

}  // namespace

OracleResult oracle_aggregate(const std::filesystem::path& file, const Schema& schema, const AggregateQuery& q) {
  const TreeEval ev(q, schema);
  const bool is_count = q.kind == AggregateKind::kCount;
  const bool integral = is_count || ev.integral(*q.expression);
  std::optional<std::size_t> group_pos;
  if (q.group_column) group_pos = ev.pos(*q.group_column);
  const auto referenced = q.referenced_columns();
  std::vector<bool> needed(schema.arity(), false);
  for (const auto& c : referenced) needed[ev.pos(c)] = true;

  OracleResult res;
  Acc total;
  std::map<double, Acc> groups;
  std::vector<Field> tuple(schema.arity());

  auto consume = [&] {
    ++res.tuples;
    if (!ev.holds(q.predicate.get(), tuple)) return;
    Acc& a = group_pos ? groups[tuple[*group_pos].f] : total;
    ++a.count;
    if (is_count) {
      a.sum += 1.0L;
      a.exact += 1;
    } else {
      a.sum += static_cast<long double>(ev.num(*q.expression, tuple));
      if (integral && __builtin_add_overflow(a.exact, ev.exact(*q.expression, tuple), &a.exact))
        throw EvalError("oracle: 128-bit accumulator overflow");
    }
  };

  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("oracle: cannot open " + file.string());
  if (schema.format() == FormatKind::kFixedWidthBinary) {
    const std::size_t w = schema.record_width();
    std::vector<unsigned char> rec(w);
    while (in.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(w))) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < schema.arity(); ++k) {
        decode_binary(schema.columns()[k], rec.data() + off, tuple[k]);
        off += schema.columns()[k].width;
      }
      consume();
    }
    if (in.gcount() != 0) ++res.rejects;
  } else {
    std::string line;
    const char delim = schema.delimiter();
    while (std::getline(in, line)) {
      std::vector<std::string_view> fields;
      std::string_view rest(line);
      for (;;) {
        const auto p = rest.find(delim);
        fields.push_back(rest.substr(0, p));
        if (p == std::string_view::npos) break;
        rest.remove_prefix(p + 1);
      }
      bool ok = fields.size() == schema.arity();
      for (std::size_t k = 0; ok && k < fields.size(); ++k)
        if (needed[k]) ok = decode_text_field(schema.columns()[k], fields[k], tuple[k]);
      if (!ok) {
        ++res.rejects;
        ++res.tuples;
        continue;
      }
      consume();
    }
  }

  auto finish = [&](const Acc& a) {
    if (q.kind == AggregateKind::kAvg)
      return a.count == 0 ? std::numeric_limits<double>::quiet_NaN()
                          : static_cast<double>(a.sum / static_cast<long double>(a.count));
    if (integral) return static_cast<double>(a.exact);
    return static_cast<double>(a.sum);
  };
  if (group_pos) {
    for (const auto& [k, a] : groups) {
      res.groups[k] = finish(a);
      if (integral && q.kind != AggregateKind::kAvg) res.exact_groups[k] = a.exact;
    }
  } else {
    res.value = finish(total);
    if (integral && q.kind != AggregateKind::kAvg) res.exact = total.exact;
  }
  return res;
}

namespace {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Calls f(indices) for every k-subset of {0..n-1}, lexicographically.
template <class F>
void for_each_subset(std::size_t n, std::size_t k, F&& f) {
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    f(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

DesignReport enumerate_designs(const std::vector<std::vector<double>>& chunks, std::size_t n, std::size_t m) {
  const std::size_t N = chunks.size();
  if (N == 0 || N > 5) throw Error("enumerate_designs: need 1 <= N <= 5");
  if (n == 0 || n > N) throw Error("enumerate_designs: need 1 <= n <= N");
  if (m == 0) throw Error("enumerate_designs: need m >= 1");
  for (const auto& c : chunks)
    if (c.empty() || c.size() > 6) throw Error("enumerate_designs: need 1 <= M_j <= 6");

  std::vector<std::uint64_t> mj(N);
  for (std::size_t j = 0; j < N; ++j) mj[j] = std::min<std::uint64_t>(m, chunks[j].size());

  // Within-chunk subsets with their sample sums, per chunk.
  std::vector<std::vector<std::pair<double, double>>> samples(N);
  for (std::size_t j = 0; j < N; ++j) {
    for_each_subset(chunks[j].size(), mj[j], [&](const std::vector<std::size_t>& s) {
      double y1 = 0.0, y2 = 0.0;
      for (auto i : s) {
        y1 += chunks[j][i];
        y2 += chunks[j][i] * chunks[j][i];
      }
      samples[j].emplace_back(y1, y2);
    });
  }

  DesignReport rep;
  for (const auto& c : chunks)
    for (double v : c) rep.tau += v;

  long double sum_tau = 0.0L, sum_tau2 = 0.0L, sum_var = 0.0L;
  bool var_unbounded = false;
  const long double subset_weight = 1.0L / static_cast<long double>(binomial(N, n));

  for_each_subset(N, n, [&](const std::vector<std::size_t>& chosen) {
    long double within_weight = 1.0L;
    for (auto j : chosen) within_weight /= static_cast<long double>(samples[j].size());
    std::vector<std::size_t> pick(chosen.size(), 0);
    std::vector<ChunkStats> stats(chosen.size());
    for (;;) {
      for (std::size_t k = 0; k < chosen.size(); ++k) {
        const auto j = chosen[k];
        stats[k] = ChunkStats{static_cast<std::uint32_t>(j), chunks[j].size(), mj[j], samples[j][pick[k]].first,
                              samples[j][pick[k]].second};
      }
      const long double w = subset_weight * within_weight;
      const double t = bilevel_estimate(stats, N);
      const double v = bilevel_variance_estimate(stats, N);
      sum_tau += w * t;
      sum_tau2 += w * static_cast<long double>(t) * t;
      if (std::isinf(v)) var_unbounded = true;
      else sum_var += w * v;
      ++rep.designs;

      std::size_t k = 0;
      while (k < pick.size() && ++pick[k] == samples[chosen[k]].size()) pick[k++] = 0;
      if (k == pick.size()) break;
    }
  });

  rep.mean_tau_hat = static_cast<double>(sum_tau);
  rep.var_tau_hat = static_cast<double>(sum_tau2 - sum_tau * sum_tau);
  rep.mean_var_hat = var_unbounded ? std::numeric_limits<double>::infinity() : static_cast<double>(sum_var);
  rep.var_true = bilevel_variance_true(chunks, n, mj);
  return rep;
}

namespace {

bool covers(const EstimateSnapshot& s, double truth) {
  if (!s.bounded) return true;
  return s.lo <= truth && truth <= s.hi;
}

// Records coverage at each checkpoint for one run.
std::vector<bool> coverage_run(const Dataset& data, const AggregateQuery& q, double truth, StrategyKind strategy,
                               bool reorder, const CoverageConfig& cfg, std::uint64_t seed) {
  const double N = static_cast<double>(data.num_chunks());
  std::vector<bool> hit(cfg.checkpoints.size(), false);
  std::vector<bool> seen(cfg.checkpoints.size(), false);
  std::atomic<bool> stop{false};
  const double last = *std::max_element(cfg.checkpoints.begin(), cfg.checkpoints.end());

  RunOptions opt;
  opt.strategy = strategy;
  opt.reorder = reorder;
  opt.pipeline = cfg.pipeline;
  opt.pipeline.seed = seed;
  opt.stop_requested = &stop;
  opt.on_evaluation = [&](const Evaluation& e) {
    for (std::size_t c = 0; c < cfg.checkpoints.size(); ++c) {
      if (seen[c] || e.processed_chunks < cfg.checkpoints[c] * N) continue;
      seen[c] = true;
      hit[c] = !e.snapshots.empty() && covers(e.snapshots.front(), truth);
    }
    if (e.processed_chunks >= last * N) stop = true;
  };
  const auto r = run_query(data, q, opt);
  if (r.state == RunState::kFailed) throw Error("coverage run failed: " + r.error);
  // A run that ended before a checkpoint is judged on its final estimate.
  for (std::size_t c = 0; c < cfg.checkpoints.size(); ++c)
    if (!seen[c]) hit[c] = !r.final.empty() && covers(r.final.front(), truth);
  return hit;
}

}  // namespace

std::vector<CoverageReport> monte_carlo_coverage(const Dataset& data, const AggregateQuery& q, double truth,
                                                 const CoverageConfig& config) {
  if (config.runs < 1) throw Error("monte_carlo_coverage: runs must be >= 1");
  if (config.checkpoints.empty()) throw Error("monte_carlo_coverage: no checkpoints");
  AggregateQuery query = q;
  query.confidence = config.confidence;
  query.epsilon = 1e-12;  // never satisfied; runs end at the last checkpoint

  struct Arm {
    std::string name;
    StrategyKind strategy;
    bool reorder;
  };
  std::vector<Arm> arms{{"bi-level", StrategyKind::kHolistic, true},
                        {"chunk-level", StrategyKind::kChunk, false}};
  if (config.include_reordered) arms.push_back({"chunk-level reordered", StrategyKind::kChunk, true});

  std::vector<CoverageReport> out;
  for (const auto& arm : arms) {
    CoverageReport rep;
    rep.strategy = arm.name;
    rep.confidence = config.confidence;
    for (double f : config.checkpoints) rep.rows.push_back(CoverageRow{f, 0, 0});
    out.push_back(std::move(rep));
  }
  for (std::size_t run = 0; run < config.runs; ++run) {
    const std::uint64_t seed = derive_seed(config.base_seed, run);
    for (std::size_t a = 0; a < arms.size(); ++a) {
      const auto hit = coverage_run(data, query, truth, arms[a].strategy, arms[a].reorder, config, seed);
      for (std::size_t c = 0; c < hit.size(); ++c) {
        ++out[a].rows[c].runs;
        if (hit[c]) ++out[a].rows[c].covered;
      }
    }
  }
  return out;
}

std::vector<BenchRow> regime_benchmark(const Dataset& data, const AggregateQuery& q,
                                       const std::vector<StrategyKind>& strategies, const PipelineConfig& pipeline) {
  const double N = static_cast<double>(data.num_chunks());
  const double total = static_cast<double>(data.index.total_tuples());
  std::vector<BenchRow> rows;
  for (auto s : strategies) {
    RunOptions opt;
    opt.strategy = s;
    opt.pipeline = pipeline;
    const auto r = run_query(data, q, opt);
    if (r.state == RunState::kFailed) throw Error("benchmark run failed: " + r.error);
    BenchRow row;
    row.strategy = s;
    row.state = r.state;
    row.time_ms = r.elapsed_ms;
    row.chunks_read = r.chunks_read;
    row.tuples_extracted = r.tuples_extracted;
    row.chunk_ratio = N > 0 ? static_cast<double>(r.chunks_read) / N : 0.0;
    row.tuple_ratio = total > 0 ? static_cast<double>(r.tuples_extracted) / total : 0.0;
    if (!r.final.empty()) {
      row.estimate = r.final.front().estimate;
      row.error_ratio = r.final.front().error_ratio;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_coverage_report(const std::vector<CoverageReport>& reports) {
  std::ostringstream os;
  if (reports.empty()) return {};
  os << "coverage of " << std::setprecision(3) << reports.front().confidence * 100 << "% bounds, "
     << reports.front().rows.front().runs << " runs\n";
  os << std::left << std::setw(24) << "fraction";
  for (const auto& r : reports.front().rows) os << std::right << std::setw(7) << std::fixed << std::setprecision(2) << r.fraction;
  os << "\n";
  for (const auto& rep : reports) {
    os << std::left << std::setw(24) << rep.strategy;
    for (const auto& r : rep.rows) os << std::right << std::setw(7) << std::fixed << std::setprecision(2) << r.ratio();
    os << "\n";
  }
  return os.str();
}

std::string format_benchmark(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "strategy" << std::setw(16) << "state" << std::right << std::setw(12) << "time_ms"
     << std::setw(8) << "chunks" << std::setw(10) << "tuples" << std::setw(9) << "chunk%" << std::setw(9) << "tuple%"
     << std::setw(16) << "estimate" << std::setw(12) << "err_ratio" << "\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(12) << to_token(r.strategy) << std::setw(16) << to_string(r.state) << std::right
       << std::fixed << std::setprecision(1) << std::setw(12) << r.time_ms << std::setw(8) << r.chunks_read
       << std::setw(10) << r.tuples_extracted << std::setprecision(3) << std::setw(9) << r.chunk_ratio
       << std::setw(9) << r.tuple_ratio << std::setprecision(1) << std::setw(16) << r.estimate
       << std::setprecision(4) << std::setw(12) << r.error_ratio << "\n";
  }
  return os.str();
}

bool is_schedule_prefix(const std::vector<std::uint32_t>& chunks, const std::vector<std::uint32_t>& schedule) {
  if (chunks.size() > schedule.size()) return false;
  return std::equal(chunks.begin(), chunks.end(), schedule.begin());
}

double max_report_gap(const std::vector<EstimateSnapshot>& trace) {
  double prev = 0.0, gap = 0.0;
  for (const auto& s : trace) {
    gap = std::max(gap, s.timestamp_ms - prev);
    prev = s.timestamp_ms;
  }
  return gap;
}

}  // namespace olaraw

namespace olaraw {

SyntheticSpec default_dataset_spec() {
  SyntheticSpec s;
  s.tuples = 64 * 4096;
  s.columns = 16;
  return s;
}

ExperimentSetup coverage_setup() {
  ExperimentSetup e;
  e.spec = default_dataset_spec();
  e.spec.columns = 4;
  e.spec.layout = SyntheticLayout::kClustered;
  e.spec.cluster_tuples = 4096;
  e.spec.cluster_noise = 64000;
  e.sql = "SELECT SUM(a1) FROM t WHERE a2 >= 64000";
  e.pipeline.workers = 16;
  e.pipeline.buffer_capacity = 16;
  e.pipeline.per_tuple_cost_us = 2.0;
  e.pipeline.cost_on_match_only = true;
  e.delta_ms = 20.0;
  return e;
}

ExperimentSetup cpu_bound_setup() {
  ExperimentSetup e;
  e.spec = default_dataset_spec();
  e.spec.columns = 4;
  e.spec.layout = SyntheticLayout::kClustered;
  e.spec.cluster_tuples = 4096;
  e.spec.cluster_noise = 100;
  e.sql = "SELECT SUM(a1) FROM t";
  e.pipeline.workers = 1;
  e.pipeline.buffer_capacity = 4;
  e.pipeline.per_tuple_cost_us = 2.0;
  e.epsilon = 0.05;
  e.delta_ms = 100.0;
  return e;
}

ExperimentSetup io_bound_setup() {
  ExperimentSetup e;
  e.spec = default_dataset_spec();
  e.spec.layout = SyntheticLayout::kRepeated;
  e.spec.cluster_tuples = 4096;
  e.spec.format = FormatKind::kFixedWidthBinary;
  e.sql = "SELECT SUM(a1) FROM t";
  e.pipeline.workers = 16;
  e.pipeline.buffer_capacity = 4;
  e.pipeline.read_bandwidth_mb_s = 20.0;
  e.epsilon = 0.05;
  e.delta_ms = 100.0;
  return e;
}

}  // namespace olaraw
