#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "olaraw/controller.hpp"
#include "olaraw/estimator.hpp"
#include "olaraw/harness.hpp"
#include "support.hpp"

using namespace olaraw;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b)); }

AggregateQuery query(const std::string& sql, double epsilon, double delta_ms, double confidence = 0.95) {
  auto q = parse_query(sql);
  q.epsilon = epsilon;
  q.delta_ms = delta_ms;
  q.confidence = confidence;
  return q;
}

const Dataset& dataset(const std::string& name, const SyntheticSpec& spec) {
  static test_support::TempDir dir;
  static std::map<std::string, Dataset> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    generate_synthetic(dir / name, spec);
    it = cache.emplace(name, open_dataset(dir / name)).first;
  }
  return it->second;
}

std::string int128_text(Int128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
  std::string s;
  while (u > 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  return neg ? "-" + s : s;
}

Outcome exactness() {
  const auto& data = dataset("default.csv", default_dataset_spec());
  const char* sqls[] = {"SELECT SUM(a1) FROM t", "SELECT SUM(a3 + 2*a16) FROM t WHERE a5 > 2",
                        "SELECT COUNT(*) FROM t WHERE a8 BETWEEN 1 AND 4"};
  std::ostringstream d;
  bool ok = true;
  double worst = 0.0;
  for (const char* sql : sqls) {
    const auto q = query(sql, 0.05, 1000.0);
    const auto truth = oracle_aggregate(data.path, data.schema, q);
    RunOptions o;
    o.strategy = StrategyKind::kExt;
    o.pipeline.workers = 4;
    const auto t = Clock::now();
    const auto r = run_query(data, q, o);
    const double secs = seconds_since(t);
    worst = std::max(worst, secs);
    const bool same = r.exact && truth.exact && *r.exact == *truth.exact && r.state == RunState::kExactComplete;
    ok = ok && same && secs < 10.0;
    if (!same)
      d << " mismatch on '" << sql << "': " << (r.exact ? int128_text(*r.exact) : "none") << " vs "
        << (truth.exact ? int128_text(*truth.exact) : "none") << ";";
  }
  d << " 3 queries bit-exact=" << (ok ? "yes" : "no") << ", slowest EXT run " << worst << " s";
  return {ok, d.str()};
}

Outcome unbiasedness() {
  std::mt19937_64 gen(2024);
  std::size_t instances = 0, designs = 0, checked_var = 0;
  double worst_tau = 0.0, worst_var = 0.0;
  bool ok = true;
  const auto t = Clock::now();
  while (instances < 24) {
    const std::size_t N = 1 + gen() % 4;
    std::vector<std::vector<double>> chunks(N);
    for (auto& c : chunks) {
      const std::size_t M = 1 + gen() % 5;
      for (std::size_t i = 0; i < M; ++i) c.push_back(static_cast<double>(static_cast<int>(gen() % 200) - 50));
    }
    for (std::size_t n = 1; n <= N; ++n) {
      const auto r = enumerate_designs(chunks, n, 2);
      designs += r.designs;
      const double et = std::fabs(r.mean_tau_hat - r.tau) / std::max(1.0, std::fabs(r.tau));
      worst_tau = std::max(worst_tau, et);
      ok = ok && et <= 1e-9 && close(r.var_tau_hat, r.var_true, 1e-9);
      if (n >= 2) {
        const double ev = std::fabs(r.mean_var_hat - r.var_true) / std::max(1.0, std::fabs(r.var_true));
        worst_var = std::max(worst_var, ev);
        ok = ok && ev <= 1e-9;
        ++checked_var;
      }
    }
    ++instances;
  }
  const double secs = seconds_since(t);
  ok = ok && secs < 30.0;
  std::ostringstream d;
  d << instances << " instances, " << designs << " designs; max rel |E[tau_hat]-tau| " << worst_tau
    << ", max rel |E[var_hat]-Var| " << worst_var << " over " << checked_var << " (n>=2) cases; " << secs << " s";
  return {ok, d.str()};
}

Outcome degeneracies() {
  std::mt19937_64 gen(77);
  const auto t = Clock::now();
  bool full_ok = true, between_ok = true, chunk_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t N = 2 + gen() % 10;
    std::vector<ChunkStats> full, partial;
    std::vector<double> sums;
    for (std::uint32_t j = 0; j < N; ++j) {
      const std::uint64_t M = 2 + gen() % 20;
      std::vector<double> xs(M);
      for (auto& x : xs) x = static_cast<double>(gen() % 1000);
      ChunkStats f{j, M, M, 0.0, 0.0};
      for (double x : xs) {
        f.y1 += x;
        f.y2 += x * x;
      }
      full.push_back(f);
      sums.push_back(f.y1);
      const std::uint64_t m = 2 + gen() % (M - 1);
      ChunkStats p{j, M, m, 0.0, 0.0};
      for (std::uint64_t i = 0; i < m; ++i) {
        p.y1 += xs[i];
        p.y2 += xs[i] * xs[i];
      }
      partial.push_back(p);
    }
    const double v = bilevel_variance_estimate(full, N);
    const auto ci = confidence_interval(bilevel_estimate(full, N), v, 0.95);
    full_ok = full_ok && v == 0.0 && ci.half_width == 0.0 && ci.hi == ci.lo;
    between_ok = between_ok && bilevel_variance_terms(partial, N).between == 0.0;

    // chunk-level over a random subset of fully extracted chunks
    const std::size_t n = 2 + gen() % (N - 1);
    std::vector<std::size_t> idx(N);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), gen);
    idx.resize(n);
    std::vector<ChunkStats> sub;
    std::vector<double> sub_sums;
    for (auto i : idx) {
      sub.push_back(full[i]);
      sub_sums.push_back(sums[i]);
    }
    const std::size_t Ntot = N + gen() % 10;
    const auto cl = chunk_level_estimate(sub_sums, Ntot);
    chunk_ok = chunk_ok && close(cl.tau_hat, bilevel_estimate(sub, Ntot), 1e-12) &&
               close(cl.var_hat, bilevel_variance_estimate(sub, Ntot), 1e-9);
  }
  const double secs = seconds_since(t);
  std::ostringstream d;
  d << "full sample var=0/width=0: " << (full_ok ? "yes" : "no") << "; n=N between term 0: "
    << (between_ok ? "yes" : "no") << "; chunk-level == bi-level at m=M (100 inputs): " << (chunk_ok ? "yes" : "no")
    << "; " << secs << " s";
  return {full_ok && between_ok && chunk_ok && secs < 5.0, d.str()};
}

Outcome coverage() {
  const auto setup = coverage_setup();
  const auto& data = dataset("coverage.csv", setup.spec);
  const auto q = query(setup.sql, 0.05, setup.delta_ms);
  const double truth = oracle_aggregate(data.path, data.schema, q).value;
  CoverageConfig cfg;
  cfg.runs = 100;
  cfg.pipeline = setup.pipeline;
  cfg.include_reordered = false;
  const auto t = Clock::now();
  const auto reports = monte_carlo_coverage(data, q, truth, cfg);
  const double secs = seconds_since(t);
  const auto& bi = reports.at(0);
  const auto& chunk = reports.at(1);
  bool ok = secs < 600.0;
  std::ostringstream d;
  d << "bi-level";
  for (const auto& row : bi.rows) {
    d << " " << row.fraction << ":" << row.ratio();
    if (row.fraction >= 0.03 - 1e-12) ok = ok && row.ratio() >= 0.90;
  }
  d << "; chunk-level";
  for (const auto& row : chunk.rows) d << " " << row.fraction << ":" << row.ratio();
  const double gap = bi.rows.back().ratio() - chunk.rows.back().ratio();
  ok = ok && gap >= 0.10;
  d << "; gap at .30 = " << gap << "; " << secs << " s";
  std::printf("%s", format_coverage_report(reports).c_str());
  return {ok, d.str()};
}

Outcome single_pass() {
  const auto setup = cpu_bound_setup();
  const auto& data = dataset("cpu.csv", setup.spec);
  const double eps = 0.01;
  const auto q = query("SELECT SUM(a1 + a2) FROM t", eps, 1000.0);
  const std::size_t N = data.num_chunks();
  std::size_t all_done = 0, bad_width = 0, bad_reads = 0;
  double worst = 0.0;
  const auto t = Clock::now();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RunOptions o;
    o.strategy = StrategyKind::kSinglePass;
    o.pipeline.workers = 4;
    o.pipeline.seed = seed;
    const auto r = run_query(data, q, o);
    if (r.chunks_read > N) ++bad_reads;
    const auto& s = r.final.at(0);
    const bool every = s.n_chunks == N && r.chunks.size() == N &&
                       std::all_of(r.chunks.begin(), r.chunks.end(), [](const ChunkOutcome& c) { return c.m > 0; });
    if (every) {
      ++all_done;
      const double rel = (s.hi - s.lo) / 2.0 / std::fabs(s.estimate);
      worst = std::max(worst, rel);
      if (!(rel <= eps)) ++bad_width;
    }
  }
  const double secs = seconds_since(t);
  std::ostringstream d;
  d << all_done << "/20 runs finalized all " << N << " chunks; max final relative half-width " << worst
    << " (eps " << eps << "); runs over the width bound " << bad_width << "; runs reading more than N chunks "
    << bad_reads << "; " << secs << " s";
  return {bad_width == 0 && bad_reads == 0 && secs < 120.0, d.str()};
}

Outcome cpu_bound() {
  const auto setup = cpu_bound_setup();
  const auto& data = dataset("cpu.csv", setup.spec);
  const auto q = query(setup.sql, setup.epsilon, setup.delta_ms);
  const auto t = Clock::now();
  const auto rows = regime_benchmark(
      data, q, {StrategyKind::kChunk, StrategyKind::kSinglePass, StrategyKind::kResourceAware}, setup.pipeline);
  const double secs = seconds_since(t);
  const double chunk = static_cast<double>(rows[0].tuples_extracted);
  const double sp = static_cast<double>(rows[1].tuples_extracted);
  const double ra = static_cast<double>(rows[2].tuples_extracted);
  std::printf("%s", format_benchmark(rows).c_str());
  std::ostringstream d;
  d << "tuples CHUNK " << chunk << ", SINGLE_PASS " << sp << " (" << sp / chunk << "), RESOURCE_AWARE " << ra << " ("
    << ra / chunk << "); states " << to_string(rows[0].state) << "/" << to_string(rows[1].state) << "/"
    << to_string(rows[2].state) << "; " << secs << " s";
  return {sp <= 0.5 * chunk && ra <= 0.5 * chunk && secs < 300.0, d.str()};
}

Outcome io_bound() {
  const auto setup = io_bound_setup();
  const auto& data = dataset("io.bin", setup.spec);
  const auto q = query(setup.sql, setup.epsilon, setup.delta_ms);
  const auto t = Clock::now();
  RunOptions o;
  o.pipeline = setup.pipeline;
  o.strategy = StrategyKind::kSinglePass;
  const auto sp = run_query(data, q, o);
  o.strategy = StrategyKind::kResourceAware;
  const auto ra = run_query(data, q, o);
  const double secs = seconds_since(t);

  std::map<std::uint32_t, std::uint64_t> sp_m;
  for (const auto& c : sp.chunks)
    if (c.m > 0 && c.settled) sp_m[c.chunk] = c.m;
  std::size_t shared = 0, lower = 0;
  double sp_sum = 0, ra_sum = 0;
  for (const auto& c : ra.chunks) {
    auto it = sp_m.find(c.chunk);
    if (c.m == 0 || !c.settled || it == sp_m.end()) continue;
    ++shared;
    sp_sum += static_cast<double>(it->second);
    ra_sum += static_cast<double>(c.m);
    if (c.m < it->second) ++lower;
  }
  std::ostringstream d;
  d << "chunks read RA " << ra.chunks_read << " vs SP " << sp.chunks_read << "; over " << shared
    << " chunks settled in both, mean m_j RA " << (shared ? ra_sum / shared : 0) << " vs SP "
    << (shared ? sp_sum / shared : 0) << ", chunks where RA m_j < SP m_j: " << lower << "; " << secs << " s";
  const bool ok = ra.chunks_read <= sp.chunks_read && shared > 0 && lower == 0 && secs < 120.0;
  return {ok, d.str()};
}

Outcome synopsis_reuse() {
  const auto& data = dataset("default.csv", default_dataset_spec());
  const auto t = Clock::now();
  bool ok = true;
  std::ostringstream d;
  {
    Synopsis syn(64ull << 20, data.num_chunks());
    RunOptions o;
    o.strategy = StrategyKind::kResourceAware;
    o.pipeline.workers = 4;
    o.synopsis = &syn;
    const auto q = query("SELECT SUM(a1) FROM t WHERE a2 > 1", 0.02, 1000.0);
    const auto first = run_query(data, q, o);
    const auto second = run_query(data, q, o);
    const double speedup = first.elapsed_ms / std::max(second.elapsed_ms, 1e-6);
    ok = ok && second.chunks_read == 0 && speedup >= 5.0;
    d << "repeat: first " << first.chunks_read << " reads " << first.elapsed_ms << " ms, second "
      << second.chunks_read << " reads " << second.elapsed_ms << " ms (" << speedup << "x)";
  }
  {
    Synopsis syn(64ull << 20, data.num_chunks());
    RunOptions o;
    o.strategy = StrategyKind::kResourceAware;
    o.pipeline.workers = 4;
    o.synopsis = &syn;
    const auto first = run_query(data, query("SELECT SUM(a1) FROM t", 1e-12, 1000.0), o);
    std::uint64_t reads = 0;
    for (double eps : {0.2, 0.1, 0.05, 0.02, 0.01}) reads += run_query(data, query("SELECT SUM(a1) FROM t", eps, 1000.0), o).chunks_read;
    ok = ok && reads == 0;
    d << "; eps sequence after a full first run (" << to_string(first.state) << "): " << reads << " reads";
  }
  const double secs = seconds_since(t);
  d << "; " << secs << " s";
  return {ok && secs < 120.0, d.str()};
}

Outcome prefix_guard() {
  SyntheticSpec spec = default_dataset_spec();
  spec.tuples = 64 * 512;
  spec.columns = 2;
  const auto& data = dataset("small.csv", spec);
  const auto t = Clock::now();
  std::size_t snaps = 0, violations = 0;
  for (std::uint64_t run = 0; run < 10; ++run) {
    RunOptions o;
    o.strategy = run % 2 ? StrategyKind::kChunk : StrategyKind::kResourceAware;
    o.pipeline.workers = 8;
    o.pipeline.chunk_delay_max_ms = 50.0;
    o.pipeline.seed = 500 + run;
    const auto r = run_query(data, query("SELECT SUM(a1) FROM t", 1e-12, 10.0), o);
    for (const auto& s : r.trace) {
      ++snaps;
      if (!is_schedule_prefix(s.included, r.schedule)) ++violations;
    }
  }
  const double secs = seconds_since(t);
  std::ostringstream d;
  d << snaps << " snapshots over 10 runs, " << violations << " not a schedule prefix; " << secs << " s";
  return {violations == 0 && snaps > 0 && secs < 60.0, d.str()};
}

Outcome cadence() {
  const auto& data = dataset("default.csv", default_dataset_spec());
  RunOptions o;
  o.strategy = StrategyKind::kResourceAware;
  o.pipeline.workers = 2;
  o.pipeline.per_tuple_cost_us = 10.0;
  const double delta = 200.0;
  const auto t = Clock::now();
  const auto r = run_query(data, query("SELECT SUM(a1) FROM t", 1e-12, delta), o);
  const double secs = seconds_since(t);
  const double gap = max_report_gap(r.trace);
  const double tick = r.t_max_ms;
  std::ostringstream d;
  d << r.trace.size() << " snapshots, max gap " << gap << " ms vs delta + tick = " << delta + tick << " ms; final state "
    << to_string(r.state) << "; " << secs << " s";
  return {gap <= delta + tick && r.trace.size() >= 3 && secs < 60.0, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"exactness", exactness},        {"unbiasedness", unbiasedness}, {"degeneracies", degeneracies},
      {"coverage", coverage},          {"single-pass bound", single_pass}, {"cpu-bound regime", cpu_bound},
      {"io-bound regime", io_bound},   {"synopsis reuse", synopsis_reuse}, {"schedule-prefix guard", prefix_guard},
      {"reporting cadence", cadence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
