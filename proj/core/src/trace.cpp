#include "olaraw/trace.hpp"

#include <charconv>
#include <cmath>
#include <vector>

#include "olaraw/error.hpp"

namespace olaraw {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string format_trace_line(const EstimateSnapshot& s) {
  std::string out;
  out.reserve(200);
  out += "timestamp_ms=" + format_number(std::round(s.timestamp_ms * 1000.0) / 1000.0);
  out += " estimate=" + format_number(s.estimate);
  out += " lo=" + format_number(s.lo);
  out += " hi=" + format_number(s.hi);
  out += " error_ratio=" + format_number(s.error_ratio);
  out += " n_chunks=" + std::to_string(s.n_chunks);
  out += " tuples=" + std::to_string(s.tuples);
  out += " chunks_read=" + std::to_string(s.chunks_read);
  out += " bytes_read=" + std::to_string(s.bytes_read);
  out += " regime=";
  out += to_string(s.regime);
  if (s.group) out += " group=" + format_number(*s.group);
  if (s.stale) out += " stale=1";
  return out;
}

namespace {

double parse_double(std::string_view v) {
  if (v == "inf") return INFINITY;
  if (v == "-inf") return -INFINITY;
  if (v == "nan") return NAN;
  double d = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc() || p != v.data() + v.size()) throw FormatError("trace: bad number '" + std::string(v) + "'");
  return d;
}

std::uint64_t parse_count(std::string_view v) {
  std::uint64_t n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || p != v.data() + v.size()) throw FormatError("trace: bad count '" + std::string(v) + "'");
  return n;
}

}  // namespace

EstimateSnapshot parse_trace_line(std::string_view line) {
  static constexpr std::string_view kOrder[] = {"timestamp_ms", "estimate", "lo", "hi", "error_ratio",
                                                "n_chunks", "tuples", "chunks_read", "bytes_read", "regime"};
  std::vector<std::pair<std::string_view, std::string_view>> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    if (i >= line.size()) break;
    std::size_t j = line.find(' ', i);
    if (j == std::string_view::npos) j = line.size();
    auto tok = line.substr(i, j - i);
    auto eq = tok.find('=');
    if (eq == std::string_view::npos) throw FormatError("trace: field without '=': " + std::string(tok));
    fields.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    i = j;
  }
  if (fields.size() < std::size(kOrder)) throw FormatError("trace: too few fields");
  for (std::size_t k = 0; k < std::size(kOrder); ++k) {
    if (fields[k].first != kOrder[k])
      throw FormatError("trace: expected field '" + std::string(kOrder[k]) + "', found '" +
                        std::string(fields[k].first) + "'");
  }
  EstimateSnapshot s;
  s.timestamp_ms = parse_double(fields[0].second);
  s.estimate = parse_double(fields[1].second);
  s.lo = parse_double(fields[2].second);
  s.hi = parse_double(fields[3].second);
  s.error_ratio = parse_double(fields[4].second);
  s.n_chunks = parse_count(fields[5].second);
  s.tuples = parse_count(fields[6].second);
  s.chunks_read = parse_count(fields[7].second);
  s.bytes_read = parse_count(fields[8].second);
  if (fields[9].second == "IO_BOUND") s.regime = Regime::kIoBound;
  else if (fields[9].second == "CPU_BOUND") s.regime = Regime::kCpuBound;
  else throw FormatError("trace: bad regime '" + std::string(fields[9].second) + "'");
  s.bounded = std::isfinite(s.lo) && std::isfinite(s.hi);
  for (std::size_t k = std::size(kOrder); k < fields.size(); ++k) {
    if (fields[k].first == "group") s.group = parse_double(fields[k].second);
    else if (fields[k].first == "stale") s.stale = fields[k].second == "1";
    else throw FormatError("trace: unknown field '" + std::string(fields[k].first) + "'");
  }
  return s;
}

std::string format_trace_header(std::uint64_t seed, std::string_view strategy, std::string_view sql) {
  return "# olaraw trace seed=" + std::to_string(seed) + " strategy=" + std::string(strategy) +
         " query=" + std::string(sql);
}

}  // namespace olaraw
