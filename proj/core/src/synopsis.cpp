#include "olaraw/synopsis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "olaraw/error.hpp"

namespace olaraw {

std::string_view to_string(SynopsisAnswer a) {
  switch (a) {
    case SynopsisAnswer::kFull: return "FULL";
    case SynopsisAnswer::kPartial: return "PARTIAL";
    case SynopsisAnswer::kRebuild: return "REBUILD";
  }
  return "?";
}

std::vector<std::uint64_t> proportional_allocation(std::uint64_t budget, std::span<const double> weights,
                                                   std::span<const std::uint64_t> caps, std::uint64_t floor) {
  const std::size_t k = weights.size();
  if (caps.size() != k) throw Error("one cap per weight required");
  std::vector<std::uint64_t> out(caps.begin(), caps.end());
  if (std::accumulate(caps.begin(), caps.end(), std::uint64_t{0}) <= budget) return out;

  std::vector<double> w(weights.begin(), weights.end());
  for (double& v : w) v = std::isfinite(v) && v > 0.0 ? v : 0.0;
  if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) std::fill(w.begin(), w.end(), 1.0);

  std::vector<double> lo(k), hi(k);
  for (std::size_t j = 0; j < k; ++j) {
    hi[j] = static_cast<double>(caps[j]);
    lo[j] = static_cast<double>(std::min(floor, caps[j]));
  }
  const double target = static_cast<double>(budget);
  auto filled = [&](double lambda, std::vector<double>* q) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = std::clamp(lambda * w[j], lo[j], hi[j]);
      if (q) (*q)[j] = v;
      total += v;
    }
    return total;
  };

  std::vector<double> quota(k);
  double saturated = 0.0;
  for (std::size_t j = 0; j < k; ++j) saturated += w[j] > 0.0 ? hi[j] : lo[j];
  if (saturated <= target) {
    // weighted entries are all capped; spread the rest evenly over the others
    std::vector<double> ones;
    std::vector<std::uint64_t> rest_caps;
    std::vector<std::size_t> idx;
    std::uint64_t used = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (w[j] > 0.0) {
        used += caps[j];
      } else {
        idx.push_back(j);
        ones.push_back(1.0);
        rest_caps.push_back(caps[j]);
      }
    }
    const auto rest = proportional_allocation(budget - used, ones, rest_caps, floor);
    for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = rest[i];
    return out;
  }

  double a = 0.0, b = 1.0;
  while (filled(b, nullptr) < target) b *= 2.0;
  for (int it = 0; it < 200 && a < b; ++it) {
    const double mid = a + (b - a) / 2.0;
    if (mid <= a || mid >= b) break;
    (filled(mid, nullptr) <= target ? a : b) = mid;
  }
  filled(a, &quota);

  std::uint64_t used = 0;
  for (std::size_t j = 0; j < k; ++j) {
    out[j] = std::min(caps[j], static_cast<std::uint64_t>(std::floor(quota[j])));
    used += out[j];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return quota[x] - std::floor(quota[x]) > quota[y] - std::floor(quota[y]);
  });
  while (used < budget) {
    bool moved = false;
    for (std::size_t idx = 0; used < budget && idx < k; ++idx) {
      const auto j = order[idx];
      if (out[j] < caps[j]) {
        ++out[j];
        ++used;
        moved = true;
      }
    }
    if (!moved) break;
  }
  return out;
}

Synopsis::Synopsis(std::uint64_t budget_bytes, std::size_t num_chunks)
    : budget_bytes_(budget_bytes), num_chunks_(num_chunks) {}

std::uint64_t Synopsis::budget_tuples() const { return budget_bytes_ / (8 * std::max<std::size_t>(1, width())); }

std::uint64_t Synopsis::retained() const {
  std::uint64_t n = 0;
  for (const auto& c : chunks_) n += c.length;
  return n;
}

const SynopsisChunk* Synopsis::find(std::uint32_t chunk) const {
  for (const auto& c : chunks_)
    if (c.chunk == chunk) return &c;
  return nullptr;
}

void Synopsis::reset(std::vector<std::string> columns, std::string origin, std::size_t num_chunks) {
  columns_ = std::move(columns);
  origin_ = std::move(origin);
  num_chunks_ = num_chunks;
  chunks_.clear();
}

void Synopsis::trim_front(SynopsisChunk& c, std::uint64_t keep) {
  if (keep >= c.length) return;
  const std::uint64_t drop = c.length - keep;
  c.start = (c.start + drop) % c.M;
  c.length = keep;
  c.rows.erase(c.rows.begin(), c.rows.begin() + static_cast<std::ptrdiff_t>(drop * width()));
  c.ok.erase(c.ok.begin(), c.ok.begin() + static_cast<std::ptrdiff_t>(drop));
}

void Synopsis::rebalance() {
  for (;;) {
    const std::uint64_t budget = budget_tuples();
    if (retained() <= budget) return;
    std::uint64_t floors = 0;
    for (const auto& c : chunks_) floors += std::min(kFloor, c.length);
    if (floors > budget) {
      auto victim = std::min_element(chunks_.begin(), chunks_.end(), [](const auto& a, const auto& b) {
        return a.variance < b.variance || (a.variance == b.variance && a.chunk > b.chunk);
      });
      evicted_.push_back(victim->chunk);
      chunks_.erase(victim);
      continue;
    }
    // ascending chunk id so remainder ties favor the lower id
    std::vector<std::size_t> by_id(chunks_.size());
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(), [&](auto a, auto b) { return chunks_[a].chunk < chunks_[b].chunk; });
    std::vector<double> w;
    std::vector<std::uint64_t> caps;
    for (auto i : by_id) {
      w.push_back(chunks_[i].variance);
      caps.push_back(chunks_[i].length);
    }
    const auto alloc = proportional_allocation(budget, w, caps, kFloor);
    for (std::size_t k = 0; k < by_id.size(); ++k) trim_front(chunks_[by_id[k]], alloc[k]);
    return;
  }
}

void Synopsis::insert_chunk(SynopsisChunk chunk) {
  if (find(chunk.chunk)) throw Error("chunk " + std::to_string(chunk.chunk) + " already in the synopsis");
  if (chunk.length == 0 || chunk.length > chunk.M) throw Error("synopsis window must be non-empty and within the chunk");
  if (chunk.rows.size() != chunk.length * width() || chunk.ok.size() != chunk.length)
    throw Error("synopsis rows do not match the window");
  chunks_.push_back(std::move(chunk));
  rebalance();
}

void Synopsis::extend_chunk(SynopsisChunk chunk) {
  auto it = std::find_if(chunks_.begin(), chunks_.end(), [&](const auto& c) { return c.chunk == chunk.chunk; });
  if (it == chunks_.end()) throw Error("chunk " + std::to_string(chunk.chunk) + " not in the synopsis");
  if (it->start != chunk.start || it->seed != chunk.seed || chunk.length < it->length || chunk.length > chunk.M)
    throw Error("extension must continue the stored window");
  if (chunk.rows.size() != chunk.length * width() || chunk.ok.size() != chunk.length)
    throw Error("synopsis rows do not match the window");
  *it = std::move(chunk);
  rebalance();
}

std::vector<std::size_t> Synopsis::column_positions(const Schema& schema) const {
  std::vector<std::size_t> pos;
  for (const auto& name : columns_) {
    auto idx = schema.index_of(name);
    if (!idx) throw SchemaError("synopsis column '" + name + "' not in schema");
    pos.push_back(*idx);
  }
  return pos;
}

std::uint64_t Synopsis::resample_chunk(std::uint32_t chunk, std::uint64_t needed, const RawChunk& raw,
                                       const Schema& schema) {
  auto it = std::find_if(chunks_.begin(), chunks_.end(), [&](const auto& c) { return c.chunk == chunk; });
  if (it == chunks_.end()) throw Error("chunk " + std::to_string(chunk) + " not in the synopsis");
  if (raw.tuples() != it->M) throw FormatError("raw chunk does not match the synopsis");
  const auto positions = column_positions(schema);
  std::vector<std::size_t> wanted(positions);
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  std::vector<Value> values(schema.arity());

  LazyPermutation perm(it->seed, static_cast<std::uint32_t>(it->M));
  std::uint64_t added = 0;
  while (added < needed && it->length < it->M) {
    const auto pos = perm[(it->start + it->length) % it->M];
    const bool ok = parse_record(schema, raw.record(pos), wanted, values);
    for (auto p : positions) it->rows.push_back(ok ? values[p].f : 0.0);
    it->ok.push_back(ok ? 1 : 0);
    ++it->length;
    ++added;
  }
  if (added > 0) rebalance();
  return added;
}

SynopsisAnswer Synopsis::can_answer(const AggregateQuery& q) const {
  for (const auto& name : q.referenced_columns()) {
    if (std::find(columns_.begin(), columns_.end(), name) == columns_.end()) return SynopsisAnswer::kRebuild;
  }
  return chunks_.size() == num_chunks_ && num_chunks_ > 0 ? SynopsisAnswer::kFull : SynopsisAnswer::kPartial;
}

AccessPlan Synopsis::plan_access_order(SynopsisAnswer mode, std::span<const std::uint32_t> unsatisfied,
                                       std::span<const std::uint32_t> schedule) const {
  AccessPlan plan;
  if (mode == SynopsisAnswer::kRebuild) {
    plan.estimation_order.assign(schedule.begin(), schedule.end());
    plan.disk_order = plan.estimation_order;
    return plan;
  }
  auto is_unsatisfied = [&](std::uint32_t j) {
    return std::find(unsatisfied.begin(), unsatisfied.end(), j) != unsatisfied.end();
  };
  for (const auto& c : chunks_) plan.estimation_order.push_back(c.chunk);
  for (auto j : schedule) {
    if (!find(j)) {
      plan.estimation_order.push_back(j);
      plan.disk_order.push_back(j);
    }
  }
  std::vector<const SynopsisChunk*> refetch;
  for (const auto& c : chunks_)
    if (is_unsatisfied(c.chunk) && !c.complete()) refetch.push_back(&c);
  if (mode == SynopsisAnswer::kFull) {
    std::stable_sort(refetch.begin(), refetch.end(), [](const auto* a, const auto* b) {
      return a->variance > b->variance || (a->variance == b->variance && a->chunk < b->chunk);
    });
  }
  for (const auto* c : refetch) plan.disk_order.push_back(c->chunk);
  return plan;
}

ExtractTask Synopsis::task_for(const SynopsisChunk& c, const BoundQuery& query) const {
  ExtractTask t;
  t.chunk = c.chunk;
  t.M = c.M;
  t.perm_seed = c.seed;
  t.start = c.start;
  t.cursor = c.length;
  t.rows = c.rows;
  t.row_ok = c.ok;

  const auto positions = column_positions(query.schema());
  std::vector<Value> values(query.schema().arity());
  const std::size_t w = width();
  const bool grouped = query.has_group();
  for (std::uint64_t r = 0; r < c.length; ++r) {
    if (!c.ok[r]) {
      ++t.rejects;
      continue;
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const double v = c.rows[r * w + i];
      values[positions[i]].f = v;
      values[positions[i]].i = static_cast<std::int64_t>(std::llround(v));
    }
    const bool pass = query.predicate(values);
    const double x = pass ? query.value(values) : 0.0;
    t.moments.add(x, pass ? 1.0 : 0.0);
    if (pass && grouped) {
      auto& g = t.groups[query.group_key(values)];
      g.sx += x;
      g.sxx += x * x;
      g.sc += 1.0;
    }
  }
  return t;
}

SynopsisSummary Synopsis::summary() const {
  SynopsisSummary s;
  s.budget_bytes = budget_bytes_;
  s.budget_tuples = budget_tuples();
  s.retained_tuples = retained();
  s.chunks_present = chunks_.size();
  s.chunks_total = num_chunks_;
  s.columns = columns_;
  s.origin = origin_;
  return s;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string field(std::string_view line, std::string_view key) {
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) {
    if (tok.size() > key.size() && tok.compare(0, key.size(), key) == 0 && tok[key.size()] == '=')
      return tok.substr(key.size() + 1);
  }
  throw FormatError("synopsis file: missing field '" + std::string(key) + "'");
}

template <class T>
T number(const std::string& s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw FormatError("synopsis file: bad number '" + s + "'");
  return v;
}

}  // namespace

std::string Synopsis::export_text() const {
  std::string out = "# olaraw synopsis\n";
  std::string cols;
  for (const auto& c : columns_) cols += (cols.empty() ? "" : ",") + c;
  out += "budget_bytes=" + std::to_string(budget_bytes_) + " chunks=" + std::to_string(num_chunks_) +
         " columns=" + (cols.empty() ? "-" : cols) + "\n";
  out += "origin=" + origin_ + "\n";
  for (const auto& c : chunks_) {
    out += "chunk=" + std::to_string(c.chunk) + " M=" + std::to_string(c.M) + " seed=" + std::to_string(c.seed) +
           " start=" + std::to_string(c.start) + " length=" + std::to_string(c.length) +
           " cursor=" + std::to_string(c.cursor()) + " variance=" + format_double(c.variance) + "\n";
    for (std::uint64_t r = 0; r < c.length; ++r) {
      out += c.ok[r] ? "+" : "-";
      for (std::size_t i = 0; i < width(); ++i) out += " " + format_double(c.rows[r * width() + i]);
      out += "\n";
    }
  }
  return out;
}

Synopsis Synopsis::import_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#') return true;
    }
    return false;
  };
  if (!next()) throw FormatError("synopsis file: missing header");
  Synopsis syn(number<std::uint64_t>(field(line, "budget_bytes")), number<std::size_t>(field(line, "chunks")));
  const std::string cols = field(line, "columns");
  if (cols != "-") {
    std::stringstream cs(cols);
    std::string c;
    while (std::getline(cs, c, ',')) syn.columns_.push_back(c);
  }
  if (!next() || line.rfind("origin=", 0) != 0) throw FormatError("synopsis file: missing origin");
  syn.origin_ = line.substr(7);

  bool have = next();
  while (have) {
    SynopsisChunk c;
    c.chunk = number<std::uint32_t>(field(line, "chunk"));
    c.M = number<std::uint64_t>(field(line, "M"));
    c.seed = number<std::uint64_t>(field(line, "seed"));
    c.start = number<std::uint64_t>(field(line, "start"));
    c.length = number<std::uint64_t>(field(line, "length"));
    c.variance = number<double>(field(line, "variance"));
    for (std::uint64_t r = 0; r < c.length; ++r) {
      if (!next() || (line[0] != '+' && line[0] != '-')) throw FormatError("synopsis file: truncated chunk rows");
      c.ok.push_back(line[0] == '+' ? 1 : 0);
      std::istringstream vs(line.substr(1));
      std::string tok;
      std::size_t n = 0;
      while (vs >> tok) {
        c.rows.push_back(number<double>(tok));
        ++n;
      }
      if (n != syn.width()) throw FormatError("synopsis file: row width mismatch");
    }
    syn.chunks_.push_back(std::move(c));
    have = next();
  }
  return syn;
}

void Synopsis::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  out << export_text();
  if (!out) throw IoError("cannot write " + path.string());
}

Synopsis Synopsis::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return import_text(ss.str());
}

}  // namespace olaraw
