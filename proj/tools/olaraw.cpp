#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "olaraw/controller.hpp"
#include "olaraw/error.hpp"
#include "olaraw/harness.hpp"
#include "olaraw/query.hpp"
#include "olaraw/service.hpp"
#include "olaraw/synopsis.hpp"
#include "olaraw/trace.hpp"

namespace fs = std::filesystem;
using namespace olaraw;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

struct PipelineFlags {
  std::size_t threads = 4;
  std::size_t buffer = 4;
  double cost_us = 0.0;
  bool cost_on_match = false;
  double bandwidth = 0.0;
  double chunk_delay = 0.0;
  std::uint64_t seed = 1;

  void add(CLI::App* app) {
    app->add_option("--threads,-P", threads, "extraction workers")->check(CLI::PositiveNumber);
    app->add_option("--buffer", buffer, "chunk buffer capacity")->check(CLI::PositiveNumber);
    app->add_option("--cost-us", cost_us, "busy-wait per extracted tuple (microseconds)")->check(CLI::NonNegativeNumber);
    app->add_flag("--cost-on-match", cost_on_match, "charge the cost only to tuples passing the predicate");
    app->add_option("--bandwidth", bandwidth, "simulated read bandwidth in MB/s (0: unthrottled)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--chunk-delay", chunk_delay, "random stall of up to this many ms per chunk")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--seed", seed, "sampling seed");
  }

  PipelineConfig config() const {
    PipelineConfig c;
    c.workers = threads;
    c.buffer_capacity = buffer;
    c.per_tuple_cost_us = cost_us;
    c.cost_on_match_only = cost_on_match;
    c.read_bandwidth_mb_s = bandwidth;
    c.chunk_delay_max_ms = chunk_delay;
    c.seed = seed;
    return c;
  }
};

int cmd_index(const std::string& file, std::uint64_t chunk_bytes, std::size_t chunks) {
  const Schema schema = Schema::load(schema_path_for(file));
  const auto size = fs::file_size(file);
  const std::uint64_t target = chunk_bytes > 0 ? chunk_bytes : std::max<std::uint64_t>(1, (size + chunks - 1) / chunks);
  const auto index = build_chunk_index(file, schema, target);
  index.save(index_path_for(file));
  std::cout << "indexed " << file << ": " << index.num_chunks() << " chunks, " << index.total_tuples()
            << " tuples\n";
  return 0;
}

int cmd_query(const std::string& file, const std::string& sql, double epsilon, double delta, double confidence,
              const std::string& strategy, const PipelineFlags& pf, const std::string& synopsis_path,
              std::uint64_t budget, bool no_reorder) {
  const Dataset data = open_dataset(file);
  AggregateQuery q = parse_query(sql, &data.schema);
  q.epsilon = epsilon;
  q.delta_ms = delta;
  q.confidence = confidence;
  q.validate();

  RunOptions opt;
  opt.strategy = parse_strategy(strategy);
  opt.pipeline = pf.config();
  opt.reorder = !no_reorder;
  opt.stop_requested = &g_interrupted;
  std::optional<Synopsis> syn;
  if (!synopsis_path.empty()) {
    syn = fs::exists(synopsis_path) ? Synopsis::load(synopsis_path) : Synopsis(budget, data.num_chunks());
    opt.synopsis = &*syn;
  }
  std::cout << format_trace_header(opt.pipeline.seed, to_token(opt.strategy), to_sql(q)) << "\n";
  opt.on_snapshot = [](const EstimateSnapshot& s) { std::cout << format_trace_line(s) << std::endl; };

  std::signal(SIGINT, on_signal);
  const auto r = run_query(data, q, opt);
  std::signal(SIGINT, SIG_DFL);
  if (syn && r.state != RunState::kFailed) syn->save(synopsis_path);

  std::cerr << "state=" << to_string(r.state) << " chunks_read=" << r.chunks_read
            << " tuples_extracted=" << r.tuples_extracted << " elapsed_ms=" << format_number(r.elapsed_ms);
  if (r.exact) std::cerr << " exact=" << to_string(*r.exact);
  if (r.rejects) std::cerr << " rejects=" << r.rejects;
  std::cerr << "\n";
  if (r.state == RunState::kFailed) {
    std::cerr << "error: " << r.error << "\n";
    return 1;
  }
  return 0;
}

int cmd_bench(const std::string& file, const std::string& sql, double epsilon, double delta,
              const std::vector<std::string>& strategies, const PipelineFlags& pf) {
  const Dataset data = open_dataset(file);
  AggregateQuery q = parse_query(sql, &data.schema);
  q.epsilon = epsilon;
  q.delta_ms = delta;
  q.validate();
  std::vector<StrategyKind> kinds;
  for (const auto& s : strategies) kinds.push_back(parse_strategy(s));
  std::cout << format_benchmark(regime_benchmark(data, q, kinds, pf.config()));
  return 0;
}

int cmd_coverage(std::size_t runs, std::string file, const std::string& sql_in, std::optional<std::size_t> threads,
                 std::optional<double> cost) {
  ExperimentSetup setup = coverage_setup();
  if (threads) setup.pipeline.workers = *threads;
  if (cost) setup.pipeline.per_tuple_cost_us = *cost;
  std::string sql = sql_in.empty() ? setup.sql : sql_in;
  if (file.empty()) {
    const auto dir = fs::temp_directory_path() / "olaraw-coverage";
    fs::create_directories(dir);
    file = (dir / "coverage.csv").string();
    if (!fs::exists(file)) {
      generate_synthetic(file, setup.spec);
      fs::remove(index_path_for(file));
    }
  }
  const Dataset data = open_dataset(file);
  AggregateQuery q = parse_query(sql, &data.schema);
  q.delta_ms = setup.delta_ms;
  const auto truth = oracle_aggregate(file, data.schema, q);
  CoverageConfig cfg;
  cfg.runs = runs;
  cfg.pipeline = setup.pipeline;
  std::cout << format_coverage_report(monte_carlo_coverage(data, q, truth.value, cfg));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"olaraw: online aggregation over raw files"};
  app.require_subcommand(1);

  auto* index = app.add_subcommand("index", "build the chunk index of a raw file");
  std::string index_file;
  std::uint64_t chunk_bytes = 0;
  std::size_t index_chunks = 64;
  index->add_option("--file", index_file, "raw data file (schema sidecar required)")->required();
  index->add_option("--chunk-bytes", chunk_bytes, "target chunk size in bytes");
  index->add_option("--chunks", index_chunks, "target chunk count when --chunk-bytes is absent")
      ->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "write a synthetic raw file, its schema and index");
  SyntheticSpec spec = default_dataset_spec();
  std::string gen_out, gen_format = "text", gen_layout = "zipf";
  std::size_t gen_chunks = 64;
  gen->add_option("--out", gen_out, "output file")->required();
  gen->add_option("--tuples", spec.tuples, "number of tuples")->check(CLI::PositiveNumber);
  gen->add_option("--columns", spec.columns, "number of int64 columns")->check(CLI::PositiveNumber);
  gen->add_option("--chunks", gen_chunks, "chunks in the generated index")->check(CLI::PositiveNumber);
  gen->add_option("--format", gen_format, "text or binary")->check(CLI::IsMember({"text", "binary"}));
  gen->add_option("--layout", gen_layout, "zipf, clustered or repeated")
      ->check(CLI::IsMember({"zipf", "clustered", "repeated"}));
  gen->add_option("--zipf-lo", spec.zipf_lo, "zipf exponent of the first column");
  gen->add_option("--zipf-hi", spec.zipf_hi, "zipf exponent bound for the last column");
  gen->add_option("--noise", spec.cluster_noise, "clustered layout: noise range");
  gen->add_option("--block", spec.cluster_tuples, "clustered and repeated layouts: tuples per block")->check(CLI::PositiveNumber);
  gen->add_option("--seed", spec.seed, "generator seed");

  auto* query = app.add_subcommand("query", "run an online aggregation query, printing trace lines");
  std::string q_file, q_sql, q_strategy = "resource", q_synopsis;
  double q_eps = 0.05, q_delta = 1000.0, q_conf = 0.95;
  std::uint64_t q_budget = 64ull << 20;
  bool q_no_reorder = false;
  PipelineFlags q_pf;
  query->add_option("--file", q_file, "raw data file")->required();
  query->add_option("--sql", q_sql, "SELECT SUM|COUNT|AVG(...) FROM t [WHERE ...] [GROUP BY col]")->required();
  query->add_option("--epsilon", q_eps, "target relative half-width")->check(CLI::PositiveNumber);
  query->add_option("--delta", q_delta, "reporting interval in ms")->check(CLI::Range(1.0, 1e9));
  query->add_option("--confidence", q_conf, "confidence level");
  query->add_option("--strategy", q_strategy, "ext, chunk, holistic, singlepass or resource")
      ->check(CLI::IsMember({"ext", "chunk", "holistic", "singlepass", "resource"}));
  query->add_option("--synopsis", q_synopsis, "synopsis file to load before and save after the run");
  query->add_option("--budget", q_budget, "synopsis budget in bytes for a new synopsis");
  query->add_flag("--no-reorder", q_no_reorder, "chunk strategy: use completion order");
  q_pf.add(query);

  auto* bench = app.add_subcommand("bench", "compare strategies on one file");
  std::string b_file, b_sql = "SELECT SUM(a1) FROM t";
  double b_eps = 0.05, b_delta = 1000.0;
  std::vector<std::string> b_strats{"ext", "chunk", "holistic", "singlepass", "resource"};
  PipelineFlags b_pf;
  bench->add_option("--file", b_file, "raw data file")->required();
  bench->add_option("--sql", b_sql, "query");
  bench->add_option("--epsilon", b_eps, "target relative half-width")->check(CLI::PositiveNumber);
  bench->add_option("--delta", b_delta, "reporting interval in ms")->check(CLI::Range(1.0, 1e9));
  bench->add_option("--strategies", b_strats, "strategies to run")
      ->check(CLI::IsMember({"ext", "chunk", "holistic", "singlepass", "resource"}));
  b_pf.add(bench);

  auto* coverage = app.add_subcommand("coverage", "Monte Carlo coverage of the confidence bounds");
  std::size_t c_runs = 100;
  std::string c_file, c_sql;
  std::optional<std::size_t> c_threads;
  std::optional<double> c_cost;
  coverage->add_option("--runs", c_runs, "simulations per strategy")->check(CLI::PositiveNumber);
  coverage->add_option("--file", c_file, "raw data file (default: generated clustered file)");
  coverage->add_option("--sql", c_sql, "query (default matches the generated file)");
  coverage->add_option("--threads,-P", c_threads, "extraction workers");
  coverage->add_option("--cost-us", c_cost, "busy-wait per matching tuple");

  auto* serve = app.add_subcommand("serve", "HTTP/SSE control service");
  ServiceConfig sc;
  std::string s_dir;
  serve->add_option("--host", sc.host, "listen address");
  serve->add_option("--port", sc.port, "listen port")->check(CLI::Range(0, 65535));
  serve->add_option("--data-dir", s_dir, "directory of raw files (OLARAW_DATA_DIR overrides)");
  serve->add_option("--budget", sc.synopsis_budget_bytes, "synopsis budget per file in bytes");
  serve->add_option("--threads,-P", sc.pipeline.workers, "default extraction workers")->check(CLI::PositiveNumber);
  serve->add_option("--epsilon", sc.epsilon, "default epsilon")->check(CLI::PositiveNumber);
  serve->add_option("--delta", sc.delta_ms, "default reporting interval in ms")->check(CLI::Range(1.0, 1e9));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*index) return cmd_index(index_file, chunk_bytes, index_chunks);
    if (*gen) {
      spec.format = gen_format == "binary" ? FormatKind::kFixedWidthBinary : FormatKind::kDelimitedText;
      spec.layout = gen_layout == "clustered"  ? SyntheticLayout::kClustered
                    : gen_layout == "repeated" ? SyntheticLayout::kRepeated
                                               : SyntheticLayout::kZipf;
      if (const auto parent = fs::path(gen_out).parent_path(); !parent.empty()) fs::create_directories(parent);
      generate_synthetic(gen_out, spec);
      return cmd_index(gen_out, 0, gen_chunks);
    }
    if (*query)
      return cmd_query(q_file, q_sql, q_eps, q_delta, q_conf, q_strategy, q_pf, q_synopsis, q_budget, q_no_reorder);
    if (*bench) return cmd_bench(b_file, b_sql, b_eps, b_delta, b_strats, b_pf);
    if (*coverage) return cmd_coverage(c_runs, c_file, c_sql, c_threads, c_cost);
    if (*serve) {
      if (!s_dir.empty()) sc.data_dir = s_dir;
      sc.apply_environment();
      Service service(sc);
      const int port = service.start();
      std::cerr << "serving " << sc.data_dir.string() << " on http://" << sc.host << ":" << port << "\n";
      service.run();
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
