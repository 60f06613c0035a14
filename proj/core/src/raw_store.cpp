#include "olaraw/raw_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "olaraw/error.hpp"

namespace olaraw {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

const char* format_tag(FormatKind f) { return f == FormatKind::kDelimitedText ? "text" : "binary"; }

bool valid_width(ColumnType type, std::uint32_t w) {
  if (type == ColumnType::kInt64) return w == 1 || w == 2 || w == 4 || w == 8;
  return w == 4 || w == 8;
}

template <class T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <class T>
void store_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

bool parse_field(ColumnType type, std::string_view text, Value& out) {
  text = trim(text);
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (type == ColumnType::kInt64) {
    if (*first == '+') ++first;
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return false;
    out.i = v;
    out.f = static_cast<double>(v);
    return true;
  }
  if (*first == '+') ++first;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return false;
  out.f = v;
  out.i = 0;
  return true;
}

bool decode_binary_field(const Column& col, const char* p, Value& out) {
  if (col.type == ColumnType::kInt64) {
    switch (col.width) {
      case 1: out.i = load_le<std::int8_t>(p); break;
      case 2: out.i = load_le<std::int16_t>(p); break;
      case 4: out.i = load_le<std::int32_t>(p); break;
      case 8: out.i = load_le<std::int64_t>(p); break;
      default: return false;
    }
    out.f = static_cast<double>(out.i);
    return true;
  }
  out.f = col.width == 4 ? static_cast<double>(load_le<float>(p)) : load_le<double>(p);
  out.i = 0;
  return true;
}

}  // namespace

// ---------------------------------------------------------------- Schema

Schema::Schema(std::vector<Column> columns, FormatKind format, char delimiter)
    : columns_(std::move(columns)), format_(format), delimiter_(delimiter) {
  if (columns_.empty()) throw SchemaError("schema has no columns");
  std::unordered_set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.name.empty()) throw SchemaError("empty column name");
    if (!seen.insert(c.name).second) throw SchemaError("duplicate column name '" + c.name + "'");
    if (format_ == FormatKind::kFixedWidthBinary) {
      if (!valid_width(c.type, c.width))
        throw SchemaError("invalid width " + std::to_string(c.width) + " for column '" + c.name + "'");
      record_width_ += c.width;
    }
  }
  if (format_ == FormatKind::kDelimitedText && (delimiter_ == '\n' || delimiter_ == '\0'))
    throw SchemaError("invalid delimiter");
}

Schema Schema::parse(std::string_view text) {
  std::vector<Column> columns;
  char delimiter = ',';
  bool any_width = false;
  bool any_plain = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view kDelim = "#delimiter=";
      if (line.starts_with(kDelim)) {
        auto d = line.substr(kDelim.size());
        if (d == "\\t" || d == "tab") delimiter = '\t';
        else if (d.size() == 1) delimiter = d.front();
        else throw SchemaError("bad delimiter directive on line " + std::to_string(line_no));
      }
      continue;
    }
    Column col;
    auto c1 = line.find(':');
    if (c1 == std::string_view::npos)
      throw SchemaError("expected name:type on line " + std::to_string(line_no));
    col.name = std::string(trim(line.substr(0, c1)));
    auto rest = line.substr(c1 + 1);
    auto c2 = rest.find(':');
    auto type = trim(rest.substr(0, c2));
    if (type == "int64") col.type = ColumnType::kInt64;
    else if (type == "float64") col.type = ColumnType::kFloat64;
    else throw SchemaError("unknown column type '" + std::string(type) + "' on line " + std::to_string(line_no));
    if (c2 != std::string_view::npos) {
      auto w = trim(rest.substr(c2 + 1));
      std::uint32_t width = 0;
      auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), width);
      if (ec != std::errc() || ptr != w.data() + w.size())
        throw SchemaError("bad width on line " + std::to_string(line_no));
      col.width = width;
      any_width = true;
    } else {
      any_plain = true;
    }
    columns.push_back(std::move(col));
  }
  if (any_width && any_plain) throw SchemaError("either every column has a width (binary) or none (text)");
  return Schema(std::move(columns), any_width ? FormatKind::kFixedWidthBinary : FormatKind::kDelimitedText,
                delimiter);
}

Schema Schema::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string Schema::to_string() const {
  std::ostringstream out;
  if (format_ == FormatKind::kDelimitedText && delimiter_ != ',') {
    if (delimiter_ == '\t') out << "#delimiter=\\t\n";
    else out << "#delimiter=" << delimiter_ << '\n';
  }
  for (const auto& c : columns_) {
    out << c.name << ':' << (c.type == ColumnType::kInt64 ? "int64" : "float64");
    if (format_ == FormatKind::kFixedWidthBinary) out << ':' << c.width;
    out << '\n';
  }
  return out.str();
}

void Schema::save(const std::filesystem::path& path) const { write_file(path, to_string()); }

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return i;
  return std::nullopt;
}

std::filesystem::path schema_path_for(const std::filesystem::path& data_file) {
  return std::filesystem::path(data_file.string() + ".schema");
}

std::filesystem::path index_path_for(const std::filesystem::path& data_file) {
  return std::filesystem::path(data_file.string() + ".idx");
}

// ---------------------------------------------------------------- ChunkIndex

std::uint64_t ChunkIndex::total_tuples() const {
  std::uint64_t m = 0;
  for (const auto& c : chunks) m += c.tuples;
  return m;
}

std::string ChunkIndex::to_string() const {
  std::ostringstream out;
  out << file_size << ' ' << chunks.size() << ' ' << total_tuples() << ' ' << format_tag(format) << '\n';
  for (const auto& c : chunks) out << c.offset << ' ' << c.length << ' ' << c.tuples << '\n';
  return out.str();
}

ChunkIndex ChunkIndex::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  ChunkIndex index;
  std::size_t n = 0;
  std::uint64_t m = 0;
  std::string tag;
  if (!(in >> index.file_size >> n >> m >> tag)) throw FormatError("malformed chunk index header");
  if (tag == "text") index.format = FormatKind::kDelimitedText;
  else if (tag == "binary") index.format = FormatKind::kFixedWidthBinary;
  else throw FormatError("unknown format tag '" + tag + "' in chunk index");
  index.chunks.resize(n);
  std::uint64_t expected_offset = 0;
  for (auto& c : index.chunks) {
    if (!(in >> c.offset >> c.length >> c.tuples)) throw FormatError("truncated chunk index");
    if (c.offset != expected_offset || c.tuples == 0 || c.length == 0)
      throw FormatError("chunk index entries are not a record-aligned partition");
    expected_offset += c.length;
  }
  if (expected_offset != index.file_size) throw FormatError("chunk index does not cover the file");
  if (index.total_tuples() != m) throw FormatError("chunk index tuple counts do not sum to M");
  return index;
}

void ChunkIndex::save(const std::filesystem::path& path) const { write_file(path, to_string()); }

ChunkIndex ChunkIndex::load(const std::filesystem::path& path) { return parse(read_file(path)); }

ChunkIndex build_chunk_index(const std::filesystem::path& file, const Schema& schema,
                             std::uint64_t target_chunk_bytes) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(file, ec);
  if (ec) throw IoError("cannot stat " + file.string() + ": " + ec.message());
  if (size == 0) throw FormatError("empty file " + file.string());
  if (target_chunk_bytes == 0) throw Error("target chunk size must be positive");

  ChunkIndex index;
  index.file_size = size;
  index.format = schema.format();

  if (schema.format() == FormatKind::kFixedWidthBinary) {
    const std::uint64_t w = schema.record_width();
    if (size % w != 0) throw FormatError("malformed trailing record: size is not a multiple of the record width");
    const std::uint64_t records = size / w;
    if (target_chunk_bytes < w && records > 1) throw FormatError("target chunk size is smaller than one record");
    std::uint64_t start = 0;  // in records
    for (std::uint64_t k = 1; start < records; ++k) {
      std::uint64_t end = std::min(records, (k * target_chunk_bytes + w - 1) / w);
      if (end <= start) continue;
      index.chunks.push_back({start * w, (end - start) * w, end - start});
      start = end;
    }
    return index;
  }

  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<char> buf(1 << 20);
  std::uint64_t pos = 0;
  std::uint64_t chunk_start = 0;
  std::uint64_t chunk_tuples = 0;
  std::uint64_t next_cut = target_chunk_bytes;
  std::uint64_t longest = 0;
  std::uint64_t record_start = 0;
  char last = '\n';
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    for (std::size_t i = 0; i < got; ++i, ++pos) {
      last = buf[i];
      if (last != '\n') continue;
      const std::uint64_t record_end = pos + 1;
      longest = std::max(longest, record_end - record_start);
      record_start = record_end;
      ++chunk_tuples;
      if (record_end >= next_cut) {
        index.chunks.push_back({chunk_start, record_end - chunk_start, chunk_tuples});
        chunk_start = record_end;
        chunk_tuples = 0;
        while (next_cut <= record_end) next_cut += target_chunk_bytes;
      }
    }
  }
  if (last != '\n') throw FormatError("malformed trailing record: file does not end with a newline");
  if (target_chunk_bytes < longest && index.total_tuples() + chunk_tuples > 1)
    throw FormatError("target chunk size is smaller than one record");
  if (chunk_tuples > 0) index.chunks.push_back({chunk_start, size - chunk_start, chunk_tuples});
  return index;
}

// ---------------------------------------------------------------- RawChunk

RawChunk::RawChunk(std::size_t id, std::string bytes, const Schema* schema)
    : id_(id), bytes_(std::move(bytes)), schema_(schema) {}

void RawChunk::build_offsets() const {
  if (offsets_built_) return;
  offsets_.clear();
  if (schema_->format() == FormatKind::kDelimitedText) {
    std::uint32_t start = 0;
    const char* data = bytes_.data();
    const std::size_t n = bytes_.size();
    const char* p = data;
    while (p < data + n) {
      const void* nl = std::memchr(p, '\n', static_cast<std::size_t>(data + n - p));
      if (nl == nullptr) break;
      offsets_.push_back(start);
      p = static_cast<const char*>(nl) + 1;
      start = static_cast<std::uint32_t>(p - data);
    }
    offsets_.push_back(start);  // sentinel: end of the last record
  }
  offsets_built_ = true;
}

std::size_t RawChunk::tuples() const {
  if (schema_->format() == FormatKind::kFixedWidthBinary) return bytes_.size() / schema_->record_width();
  build_offsets();
  return offsets_.size() - 1;
}

std::string_view RawChunk::record(std::size_t i) const {
  if (schema_->format() == FormatKind::kFixedWidthBinary) {
    const std::size_t w = schema_->record_width();
    return std::string_view(bytes_).substr(i * w, w);
  }
  build_offsets();
  const auto begin = offsets_[i];
  const auto end = offsets_[i + 1] - 1;  // drop '\n'
  return std::string_view(bytes_).substr(begin, end - begin);
}

// ---------------------------------------------------------------- RawFile

RawFile::RawFile(std::filesystem::path path, Schema schema) : path_(std::move(path)), schema_(std::move(schema)) {
  fd_ = ::open(path_.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd_ < 0) throw IoError("cannot open " + path_.string() + ": " + std::strerror(errno));
  struct stat st {};
  if (::fstat(fd_, &st) != 0) {
    ::close(fd_);
    throw IoError("cannot stat " + path_.string());
  }
  size_ = static_cast<std::uint64_t>(st.st_size);
}

RawFile::~RawFile() {
  if (fd_ >= 0) ::close(fd_);
}

RawChunk RawFile::read_chunk(const ChunkIndex& index, std::size_t j) const {
  if (j >= index.num_chunks()) throw IoError("chunk id " + std::to_string(j) + " out of range");
  if (index.file_size != size_) throw IoError("chunk index is stale: file size changed");
  const auto& info = index.chunks[j];
  std::string bytes(info.length, '\0');
  std::uint64_t done = 0;
  while (done < info.length) {
    auto r = ::pread(fd_, bytes.data() + done, info.length - done, static_cast<off_t>(info.offset + done));
    if (r < 0) {
      if (errno == EINTR) continue;
      throw IoError("read failed on " + path_.string() + ": " + std::strerror(errno));
    }
    if (r == 0) throw IoError("unexpected end of file in chunk " + std::to_string(j));
    done += static_cast<std::uint64_t>(r);
  }
  RawChunk chunk(j, std::move(bytes), &schema_);
  if (chunk.tuples() != info.tuples)
    throw FormatError("chunk " + std::to_string(j) + " has " + std::to_string(chunk.tuples()) +
                      " records, index says " + std::to_string(info.tuples));
  if (schema_.format() == FormatKind::kDelimitedText) {
    auto first = chunk.record(0);
    const auto fields = static_cast<std::size_t>(std::count(first.begin(), first.end(), schema_.delimiter())) + 1;
    if (fields != schema_.arity())
      throw FormatError("chunk " + std::to_string(j) + ": first record has " + std::to_string(fields) +
                        " fields, schema has " + std::to_string(schema_.arity()));
  }
  return chunk;
}

// ---------------------------------------------------------------- records

bool parse_record(const Schema& schema, std::string_view record, std::span<const std::size_t> wanted,
                  std::span<Value> out) {
  const auto& cols = schema.columns();
  if (schema.format() == FormatKind::kFixedWidthBinary) {
    if (record.size() != schema.record_width()) return false;
    // wanted is sorted ascending; walk offsets once
    std::size_t offset = 0;
    std::size_t col = 0;
    for (std::size_t w : wanted) {
      while (col < w) offset += cols[col++].width;
      if (!decode_binary_field(cols[w], record.data() + offset, out[w])) return false;
    }
    return true;
  }
  const char delim = schema.delimiter();
  std::size_t field = 0;
  std::size_t next_wanted = 0;
  std::size_t start = 0;
  const std::size_t n = record.size();
  for (std::size_t i = 0; i <= n; ++i) {
    if (i < n && record[i] != delim) continue;
    if (field >= cols.size()) return false;
    if (next_wanted < wanted.size() && wanted[next_wanted] == field) {
      if (!parse_field(cols[field].type, record.substr(start, i - start), out[field])) return false;
      ++next_wanted;
    }
    ++field;
    start = i + 1;
  }
  return field == cols.size();
}

// ---------------------------------------------------------------- random orders

std::vector<std::uint32_t> chunk_permutation(std::uint64_t seed, std::size_t n) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    auto k = i + rng.below(n - i);
    std::swap(order[i], order[k]);
  }
  return order;
}

ZipfSampler::ZipfSampler(std::uint64_t n, double exponent) : n_(n), exponent_(exponent) {
  if (n == 0) throw Error("zipf support must be non-empty");
  if (!(exponent >= 0.0)) throw Error("zipf exponent must be >= 0");
  if (exponent_ > 0.0) {
    h_integral_x1_ = h_integral(1.5) - 1.0;
    h_integral_n_ = h_integral(static_cast<double>(n_) + 0.5);
    s_ = 2.0 - h_integral_inverse(h_integral(2.5) - h(2.0));
  }
}

namespace {
// log1p(x)/x and expm1(x)/x with series near 0
double helper1(double x) { return std::abs(x) > 1e-8 ? std::log1p(x) / x : 1.0 - x * (0.5 - x * (1.0 / 3.0 - 0.25 * x)); }
double helper2(double x) {
  return std::abs(x) > 1e-8 ? std::expm1(x) / x : 1.0 + x * 0.5 * (1.0 + x * (1.0 / 3.0) * (1.0 + 0.25 * x));
}
}  // namespace

double ZipfSampler::h(double x) const { return std::exp(-exponent_ * std::log(x)); }

double ZipfSampler::h_integral(double x) const {
  const double log_x = std::log(x);
  return helper2((1.0 - exponent_) * log_x) * log_x;
}

double ZipfSampler::h_integral_inverse(double x) const {
  double t = x * (1.0 - exponent_);
  if (t < -1.0) t = -1.0;
  return std::exp(helper1(t) * x);
}

std::uint64_t ZipfSampler::operator()(Rng& rng) const {
  if (exponent_ == 0.0) return 1 + rng.below(n_);
  while (true) {
    const double u = h_integral_n_ + rng.uniform01() * (h_integral_x1_ - h_integral_n_);
    const double x = h_integral_inverse(u);
    double kd = std::floor(x + 0.5);
    if (kd < 1.0) kd = 1.0;
    if (kd > static_cast<double>(n_)) kd = static_cast<double>(n_);
    if (kd - x <= s_ || u >= h_integral(kd + 0.5) - h(kd)) return static_cast<std::uint64_t>(kd);
  }
}

// ---------------------------------------------------------------- synthetic data

double synthetic_zipf_parameter(const SyntheticSpec& spec, std::size_t k) {
  return spec.zipf_lo + static_cast<double>(k) * (spec.zipf_hi - spec.zipf_lo) / static_cast<double>(spec.columns);
}

Schema generate_synthetic(const std::filesystem::path& path, const SyntheticSpec& spec) {
  if (spec.columns == 0) throw Error("synthetic data needs at least one column");
  if (spec.tuples == 0) throw Error("synthetic data needs at least one tuple");
  if (spec.value_bound == 0) throw Error("value bound must be positive");

  std::vector<Column> columns;
  for (std::size_t k = 0; k < spec.columns; ++k)
    columns.push_back({"a" + std::to_string(k + 1), ColumnType::kInt64,
                       spec.format == FormatKind::kFixedWidthBinary ? 8u : 0u});
  Schema schema(std::move(columns), spec.format);

  std::vector<ZipfSampler> samplers;
  std::vector<Rng> rngs;
  for (std::size_t k = 0; k < spec.columns; ++k) {
    samplers.emplace_back(spec.value_bound, synthetic_zipf_parameter(spec, k));
    rngs.emplace_back(derive_seed(spec.seed, k));
  }

  std::vector<std::vector<std::int64_t>> base, block_values;
  if (spec.layout == SyntheticLayout::kRepeated) {
    if (spec.cluster_tuples == 0) throw Error("block size must be positive");
    base.resize(spec.columns);
    for (std::size_t k = 0; k < spec.columns; ++k)
      for (std::uint64_t i = 0; i < spec.cluster_tuples; ++i)
        base[k].push_back(static_cast<std::int64_t>(samplers[k](rngs[k])));
    block_values = base;
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  std::string buffer;
  buffer.reserve(1 << 20);
  char num[32];
  for (std::uint64_t t = 0; t < spec.tuples; ++t) {
    if (spec.layout == SyntheticLayout::kRepeated && t % spec.cluster_tuples == 0) {
      for (std::size_t k = 0; k < spec.columns; ++k) {
        auto& b = block_values[k];
        b = base[k];
        for (std::size_t i = b.size(); i > 1; --i) std::swap(b[i - 1], b[rngs[k].below(i)]);
      }
    }
    for (std::size_t k = 0; k < spec.columns; ++k) {
      std::int64_t v;
      if (spec.layout == SyntheticLayout::kZipf) {
        v = static_cast<std::int64_t>(samplers[k](rngs[k]));
      } else if (spec.layout == SyntheticLayout::kRepeated) {
        v = block_values[k][t % spec.cluster_tuples];
      } else {
        const auto block = static_cast<std::int64_t>(t / spec.cluster_tuples);
        v = block * 1000 + static_cast<std::int64_t>(rngs[k].below(spec.cluster_noise + 1));
      }
      if (spec.format == FormatKind::kFixedWidthBinary) {
        store_le<std::int64_t>(buffer, v);
      } else {
        if (k > 0) buffer.push_back(',');
        auto [ptr, ec] = std::to_chars(num, num + sizeof(num), v);
        buffer.append(num, ptr);
      }
    }
    if (spec.format == FormatKind::kDelimitedText) buffer.push_back('\n');
    if (buffer.size() >= (1 << 20) - 512) {
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      buffer.clear();
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out.flush()) throw IoError("write failed for " + path.string() + " (disk full?)");
  schema.save(schema_path_for(path));
  return schema;
}

}  // namespace olaraw
