#include <atomic>
#include <cmath>
#include <random>

#include "doctest.h"
#include "olaraw/controller.hpp"
#include "olaraw/error.hpp"
#include "olaraw/harness.hpp"
#include "support.hpp"

using namespace olaraw;
using test_support::TempDir;

namespace {

std::vector<std::vector<long long>> random_chunks(std::size_t n, std::size_t per, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<std::vector<long long>> out(n);
  for (auto& c : out)
    for (std::size_t i = 0; i < per; ++i) c.push_back(static_cast<long long>(gen() % 1000));
  return out;
}

AggregateQuery make_query(const std::string& sql, double epsilon = 0.05, double delta = 5.0) {
  auto q = parse_query(sql);
  q.epsilon = epsilon;
  q.delta_ms = delta;
  return q;
}

RunOptions options(StrategyKind k, bool lockstep = true, std::uint64_t seed = 9) {
  RunOptions o;
  o.strategy = k;
  o.pipeline.workers = 2;
  o.pipeline.buffer_capacity = 2;
  o.pipeline.group_tuples = 16;
  o.pipeline.lockstep = lockstep;
  o.pipeline.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("run states print as tokens") {
  CHECK(to_string(RunState::kExactComplete) == "EXACT_COMPLETE");
  CHECK(to_string(RunState::kStoppedByUser) == "STOPPED_BY_USER");
  CHECK(is_terminal(RunState::kSatisfied));
  CHECK_FALSE(is_terminal(RunState::kRunning));
}

TEST_CASE("open_dataset builds and reuses the index sidecar") {
  TempDir dir;
  SyntheticSpec spec;
  spec.tuples = 2000;
  spec.columns = 2;
  generate_synthetic(dir / "g.csv", spec);
  const auto a = open_dataset(dir / "g.csv");
  CHECK(a.num_chunks() == 64);
  CHECK(std::filesystem::exists(index_path_for(dir / "g.csv")));
  const auto b = open_dataset(dir / "g.csv");
  CHECK(b.index.to_string() == a.index.to_string());
  const auto c = open_dataset(dir / "g.csv", 1 << 20);
  CHECK(c.num_chunks() == 1);
  CHECK_THROWS_AS(open_dataset(dir / "missing.csv"), Error);
}

TEST_CASE("EXT scans everything and matches the oracle exactly") {
  TempDir dir;
  const auto data = test_support::single_column_dataset(dir / "x.csv", random_chunks(6, 40, 1));
  const auto q = make_query("SELECT SUM(3*x) FROM t WHERE x >= 100");
  const auto r = run_query(data, q, options(StrategyKind::kExt, false));
  CHECK(r.state == RunState::kExactComplete);
  CHECK(r.chunks_read == 6);
  CHECK(r.tuples_extracted == 240);
  const auto truth = oracle_aggregate(data.path, data.schema, q);
  REQUIRE(r.exact);
  REQUIRE(truth.exact);
  CHECK(*r.exact == *truth.exact);
  REQUIRE(r.final.size() == 1);
  CHECK(r.final[0].estimate == truth.value);
  CHECK(r.final[0].var_hat == 0.0);
  CHECK(r.final[0].final);
  CHECK(r.schedule == std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("identical chunks satisfy the bi-level strategies early") {
  TempDir dir;
  const auto data =
      test_support::single_column_dataset(dir / "c.csv", std::vector<std::vector<long long>>(20, std::vector<long long>(30, 5)));
  for (auto k : {StrategyKind::kHolistic, StrategyKind::kSinglePass, StrategyKind::kResourceAware}) {
    CAPTURE(to_token(k));
    const auto r = run_query(data, make_query("SELECT SUM(x) FROM t"), options(k));
    CHECK(r.state == RunState::kSatisfied);
    CHECK(r.chunks_read < 20);
    REQUIRE_FALSE(r.final.empty());
    CHECK(r.final[0].estimate == doctest::Approx(3000.0));
    CHECK(r.final[0].error_ratio <= 0.05);
  }
}

TEST_CASE("a full-scan bi-level run on varied data ends complete and exact") {
  TempDir dir;
  const auto data = test_support::single_column_dataset(dir / "v.csv", random_chunks(5, 30, 2));
  const auto q = make_query("SELECT SUM(x) FROM t", 1e-9);
  const auto truth = oracle_aggregate(data.path, data.schema, q);
  for (auto k : {StrategyKind::kChunk, StrategyKind::kHolistic}) {
    const auto r = run_query(data, q, options(k));
    CHECK(r.state == RunState::kExactComplete);
    CHECK(r.final[0].estimate == doctest::Approx(truth.value).epsilon(1e-12));
    CHECK(r.final[0].var_hat == 0.0);
    CHECK(r.final[0].n_chunks == 5);
  }
}

TEST_CASE("lockstep runs are reproducible") {
  TempDir dir;
  const auto data = test_support::single_column_dataset(dir / "r.csv", random_chunks(12, 60, 3));
  const auto q = make_query("SELECT SUM(x) FROM t", 0.02);
  for (auto k : {StrategyKind::kSinglePass, StrategyKind::kHolistic}) {
    const auto a = run_query(data, q, options(k));
    const auto b = run_query(data, q, options(k));
    CHECK(a.state == b.state);
    CHECK(a.schedule == b.schedule);
    CHECK(a.tuples_extracted == b.tuples_extracted);
    CHECK(a.final[0].estimate == b.final[0].estimate);
    CHECK(a.final[0].var_hat == b.final[0].var_hat);
    const auto c = run_query(data, q, options(k, true, 10));
    CHECK(c.schedule != a.schedule);
  }
}

TEST_CASE("a pre-set stop request ends the run as stopped") {
  TempDir dir;
  const auto data = test_support::single_column_dataset(dir / "s.csv", random_chunks(8, 50, 4));
  std::atomic<bool> stop{true};
  auto o = options(StrategyKind::kResourceAware, false);
  o.stop_requested = &stop;
  const auto r = run_query(data, make_query("SELECT SUM(x) FROM t", 1e-9), o);
  CHECK(r.state == RunState::kStoppedByUser);
}

TEST_CASE("snapshots are reported with final last") {
  TempDir dir;
  const auto data = test_support::single_column_dataset(dir / "t.csv", random_chunks(10, 50, 5));
  std::vector<EstimateSnapshot> seen;
  auto o = options(StrategyKind::kHolistic);
  o.on_snapshot = [&](const EstimateSnapshot& s) { seen.push_back(s); };
  const auto r = run_query(data, make_query("SELECT SUM(x) FROM t", 1e-9, 1.0), o);
  REQUIRE_FALSE(seen.empty());
  CHECK(seen.size() == r.trace.size());
  CHECK(seen.back().final);
  for (std::size_t i = 0; i + 1 < seen.size(); ++i) {
    CHECK_FALSE(seen[i].final);
    CHECK(seen[i].timestamp_ms <= seen[i + 1].timestamp_ms);
    CHECK(seen[i].n_chunks <= seen[i + 1].n_chunks);
  }
}

TEST_CASE("GROUP BY reports one snapshot per key") {
  TempDir dir;
  std::vector<std::vector<std::vector<long long>>> chunks(4);
  std::mt19937_64 gen(6);
  for (auto& c : chunks)
    for (int i = 0; i < 25; ++i) c.push_back({static_cast<long long>(gen() % 3), static_cast<long long>(gen() % 100)});
  const auto data = test_support::chunked_text_dataset(dir / "g.csv", {"k", "v"}, chunks);
  const auto q = make_query("SELECT SUM(v) FROM t GROUP BY k");
  const auto truth = oracle_aggregate(data.path, data.schema, q);
  const auto r = run_query(data, q, options(StrategyKind::kExt, false));
  CHECK(r.state == RunState::kExactComplete);
  REQUIRE(r.final.size() == truth.groups.size());
  for (const auto& s : r.final) {
    REQUIRE(s.group);
    CHECK(s.estimate == truth.groups.at(*s.group));
  }
}

TEST_CASE("a second identical run is answered from the synopsis") {
  TempDir dir;
  const auto data = test_support::single_column_dataset(dir / "m.csv", random_chunks(8, 40, 7));
  Synopsis syn(1 << 20, data.num_chunks());
  auto o = options(StrategyKind::kHolistic);
  o.synopsis = &syn;
  const auto q = make_query("SELECT SUM(x) FROM t", 1e-9);
  const auto first = run_query(data, q, o);
  CHECK(first.synopsis_mode == SynopsisAnswer::kRebuild);
  CHECK(first.chunks_read == 8);
  CHECK(syn.chunks().size() == 8);
  CHECK(syn.retained() == 320);

  const auto second = run_query(data, q, o);
  CHECK(second.synopsis_mode == SynopsisAnswer::kFull);
  CHECK(second.chunks_read == 0);
  CHECK(second.final[0].estimate == doctest::Approx(first.final[0].estimate));

  const auto other = run_query(data, make_query("SELECT COUNT(*) FROM t WHERE x > 500", 1e-9), o);
  CHECK(other.synopsis_mode == SynopsisAnswer::kFull);
  CHECK(other.chunks_read == 0);
  const auto truth = oracle_aggregate(data.path, data.schema, make_query("SELECT COUNT(*) FROM t WHERE x > 500"));
  CHECK(other.final[0].estimate == doctest::Approx(truth.value));
}

TEST_CASE("a small synopsis budget keeps a partial sample and reads again") {
  TempDir dir;
  const auto data = test_support::single_column_dataset(dir / "p.csv", random_chunks(6, 100, 8));
  Synopsis syn(8 * 120, data.num_chunks());
  auto o = options(StrategyKind::kSinglePass);
  o.synopsis = &syn;
  const auto q = make_query("SELECT SUM(x) FROM t", 1e-9);
  run_query(data, q, o);
  CHECK(syn.retained() <= 120);
  const auto again = run_query(data, q, o);
  CHECK(again.chunks_read > 0);
  CHECK(syn.retained() <= 120);
}

TEST_CASE("bad inputs fail before the run starts") {
  TempDir dir;
  const auto data = test_support::single_column_dataset(dir / "b.csv", random_chunks(2, 5, 9));
  CHECK_THROWS_AS(run_query(data, make_query("SELECT SUM(nope) FROM t"), options(StrategyKind::kExt)), SchemaError);
  CHECK_THROWS_AS(run_query(data, make_query("SELECT SUM(x) FROM t", -1.0), options(StrategyKind::kExt)), Error);
  auto o = options(StrategyKind::kExt);
  o.pipeline.workers = 0;
  CHECK_THROWS_AS(run_query(data, make_query("SELECT SUM(x) FROM t"), o), Error);
}

TEST_CASE("QueryRun runs on its own thread and can be stopped") {
  TempDir dir;
  SyntheticSpec spec;
  spec.tuples = 20000;
  spec.columns = 2;
  generate_synthetic(dir / "q.csv", spec);
  const auto data = open_dataset(dir / "q.csv");
  std::mutex mu;
  auto o = options(StrategyKind::kHolistic, false);
  o.pipeline.per_tuple_cost_us = 50.0;
  QueryRun run("q1", data, make_query("SELECT SUM(a1) FROM t", 1e-9, 5.0), o, &mu);
  const auto first = run.wait_snapshots(0, 5000);
  CHECK_FALSE(first.empty());
  CHECK(run.state() == RunState::kRunning);
  CHECK(run.stop() == RunState::kStoppedByUser);
  CHECK(run.stop() == RunState::kStoppedByUser);
  REQUIRE(run.result());
  CHECK(run.result()->state == RunState::kStoppedByUser);
  CHECK(run.snapshot_count() >= first.size());
}
