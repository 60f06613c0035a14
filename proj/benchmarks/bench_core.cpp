#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "olaraw/estimator.hpp"
#include "olaraw/pipeline.hpp"
#include "olaraw/query.hpp"
#include "olaraw/raw_store.hpp"
#include "olaraw/synopsis.hpp"

using namespace olaraw;

namespace {

RawChunk text_chunk(const Schema& schema, std::size_t tuples) {
  std::mt19937_64 gen(1);
  std::string body;
  for (std::size_t i = 0; i < tuples; ++i) {
    for (std::size_t k = 0; k < schema.arity(); ++k) {
      if (k) body += ',';
      body += std::to_string(gen() % 100000);
    }
    body += '\n';
  }
  return RawChunk(0, std::move(body), &schema);
}

Schema schema_of(std::size_t columns) {
  std::string text;
  for (std::size_t k = 0; k < columns; ++k) text += "a" + std::to_string(k + 1) + ":int64\n";
  return Schema::parse(text);
}

}  // namespace

static void BM_ParseRecord(benchmark::State& state) {
  const auto schema = schema_of(16);
  const auto chunk = text_chunk(schema, 4096);
  std::vector<std::size_t> wanted{0, 1};
  std::vector<Value> out(16);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_record(schema, chunk.record(i), wanted, out));
    i = (i + 1) % chunk.tuples();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ParseRecord);

static void BM_ExtractChunk(benchmark::State& state) {
  const auto schema = schema_of(16);
  const auto chunk = text_chunk(schema, 4096);
  const BoundQuery q(parse_query("SELECT SUM(a1) FROM t WHERE a2 > 50000"), schema);
  const bool sequential = state.range(0) == 0;
  for (auto _ : state) {
    ExtractTask t;
    t.M = chunk.tuples();
    t.perm_seed = 7;
    LazyPermutation perm(7, static_cast<std::uint32_t>(t.M));
    PositionFn pos = sequential ? PositionFn([](std::uint64_t k) { return static_cast<std::uint32_t>(k); })
                                : PositionFn([&](std::uint64_t k) { return perm[k]; });
    ExtractOptions o;
    o.quota = t.M;
    extract_batch(t, chunk, q, pos, o);
    benchmark::DoNotOptimize(t.moments.sx);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(chunk.tuples()));
}
BENCHMARK(BM_ExtractChunk)->Arg(0)->Arg(1);

static void BM_LazyPermutation(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) {
    LazyPermutation p(3, n);
    std::uint64_t acc = 0;
    for (std::uint32_t k = 0; k < n / 10; ++k) acc += p[k];
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_LazyPermutation)->Arg(4096)->Arg(1 << 20);

static void BM_BilevelVariance(benchmark::State& state) {
  std::mt19937_64 gen(5);
  std::vector<ChunkStats> stats;
  for (int j = 0; j < state.range(0); ++j) {
    const double y1 = static_cast<double>(gen() % 10000);
    stats.push_back(ChunkStats{static_cast<std::uint32_t>(j), 4096, 64, y1, y1 * y1 / 64.0 + 1000.0});
  }
  for (auto _ : state) benchmark::DoNotOptimize(bilevel_variance_estimate(stats, 4096));
}
BENCHMARK(BM_BilevelVariance)->Arg(64)->Arg(4096);

static void BM_ProportionalAllocation(benchmark::State& state) {
  std::mt19937_64 gen(9);
  std::vector<double> w(static_cast<std::size_t>(state.range(0)));
  std::vector<std::uint64_t> caps(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = static_cast<double>(gen() % 1000);
    caps[j] = 64 + gen() % 4096;
  }
  for (auto _ : state) benchmark::DoNotOptimize(proportional_allocation(w.size() * 32, w, caps, 2));
}
BENCHMARK(BM_ProportionalAllocation)->Arg(64)->Arg(1024);

BENCHMARK_MAIN();
