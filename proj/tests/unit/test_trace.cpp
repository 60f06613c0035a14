#include <cmath>
#include <random>

#include "doctest.h"
#include "olaraw/error.hpp"
#include "olaraw/trace.hpp"

using namespace olaraw;

TEST_CASE("a trace line carries the labeled fields in order") {
  EstimateSnapshot s;
  s.timestamp_ms = 1234.56789;
  s.estimate = 100.5;
  s.lo = 90.25;
  s.hi = 110.75;
  s.error_ratio = 0.1;
  s.n_chunks = 3;
  s.tuples = 4096;
  s.chunks_read = 4;
  s.bytes_read = 123456;
  s.regime = Regime::kCpuBound;
  CHECK(format_trace_line(s) ==
        "timestamp_ms=1234.568 estimate=100.5 lo=90.25 hi=110.75 error_ratio=0.1 n_chunks=3 tuples=4096 "
        "chunks_read=4 bytes_read=123456 regime=CPU_BOUND");
}

TEST_CASE("optional fields follow the fixed ones") {
  EstimateSnapshot s;
  s.group = 7.0;
  s.stale = true;
  const auto line = format_trace_line(s);
  CHECK(line.find(" group=7 stale=1") != std::string::npos);
  const auto back = parse_trace_line(line);
  REQUIRE(back.group);
  CHECK(*back.group == 7.0);
  CHECK(back.stale);
}

TEST_CASE("unbounded intervals print as infinities") {
  EstimateSnapshot s;
  s.estimate = 5.0;
  s.lo = -INFINITY;
  s.hi = INFINITY;
  s.error_ratio = INFINITY;
  const auto line = format_trace_line(s);
  CHECK(line.find("lo=-inf hi=inf error_ratio=inf") != std::string::npos);
  const auto back = parse_trace_line(line);
  CHECK_FALSE(back.bounded);
  CHECK(std::isinf(back.error_ratio));
  s.estimate = NAN;
  CHECK(std::isnan(parse_trace_line(format_trace_line(s)).estimate));
}

TEST_CASE("property: format and parse round trip") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1e12, 1e12);
  for (int i = 0; i < 1000; ++i) {
    EstimateSnapshot s;
    s.timestamp_ms = static_cast<double>(gen() % 10'000'000) / 1000.0;
    s.estimate = u(gen);
    s.lo = s.estimate - std::abs(u(gen));
    s.hi = s.estimate + std::abs(u(gen));
    s.error_ratio = std::abs(u(gen)) / 1e12;
    s.n_chunks = gen() % 100000;
    s.tuples = gen();
    s.chunks_read = gen() % 1000;
    s.bytes_read = gen();
    s.regime = gen() % 2 ? Regime::kIoBound : Regime::kCpuBound;
    if (gen() % 2) s.group = u(gen);
    s.stale = gen() % 2;
    const auto b = parse_trace_line(format_trace_line(s));
    REQUIRE(b.timestamp_ms == doctest::Approx(s.timestamp_ms).epsilon(1e-12));
    REQUIRE(b.estimate == s.estimate);
    REQUIRE(b.lo == s.lo);
    REQUIRE(b.hi == s.hi);
    REQUIRE(b.error_ratio == s.error_ratio);
    REQUIRE(b.n_chunks == s.n_chunks);
    REQUIRE(b.tuples == s.tuples);
    REQUIRE(b.chunks_read == s.chunks_read);
    REQUIRE(b.bytes_read == s.bytes_read);
    REQUIRE(b.regime == s.regime);
    REQUIRE(b.group == s.group);
    REQUIRE(b.stale == s.stale);
    REQUIRE(format_trace_line(b) == format_trace_line(s));
  }
}

TEST_CASE("malformed trace lines are rejected") {
  CHECK_THROWS_AS(parse_trace_line("timestamp_ms=1"), FormatError);
  CHECK_THROWS_AS(parse_trace_line("estimate=1 timestamp_ms=1 lo=0 hi=0 error_ratio=0 n_chunks=0 tuples=0 "
                                   "chunks_read=0 bytes_read=0 regime=IO_BOUND"),
                  FormatError);
  const std::string ok =
      "timestamp_ms=1 estimate=1 lo=0 hi=2 error_ratio=1 n_chunks=1 tuples=1 chunks_read=1 bytes_read=1 "
      "regime=IO_BOUND";
  CHECK_NOTHROW(parse_trace_line(ok));
  CHECK_THROWS_AS(parse_trace_line(ok + " color=red"), FormatError);
  CHECK_THROWS_AS(parse_trace_line(ok + " junk"), FormatError);
  CHECK_THROWS_AS(parse_trace_line("timestamp_ms=1 estimate=x lo=0 hi=2 error_ratio=1 n_chunks=1 tuples=1 "
                                   "chunks_read=1 bytes_read=1 regime=IO_BOUND"),
                  FormatError);
  CHECK_THROWS_AS(parse_trace_line("timestamp_ms=1 estimate=1 lo=0 hi=2 error_ratio=1 n_chunks=-1 tuples=1 "
                                   "chunks_read=1 bytes_read=1 regime=IO_BOUND"),
                  FormatError);
  CHECK_THROWS_AS(parse_trace_line("timestamp_ms=1 estimate=1 lo=0 hi=2 error_ratio=1 n_chunks=1 tuples=1 "
                                   "chunks_read=1 bytes_read=1 regime=BUSY"),
                  FormatError);
}

TEST_CASE("trace header names seed, strategy and query") {
  CHECK(format_trace_header(42, "RA", "SELECT SUM(a1) FROM t") ==
        "# olaraw trace seed=42 strategy=RA query=SELECT SUM(a1) FROM t");
}
