#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "olaraw/random.hpp"

namespace olaraw {

enum class ColumnType { kInt64, kFloat64 };

struct Column {
  std::string name;
  ColumnType type = ColumnType::kInt64;
  // Byte width in fixed-width binary files (int64: 1/2/4/8, float64: 4/8);
  // 0 for delimited text.
  std::uint32_t width = 0;
};

enum class FormatKind { kDelimitedText, kFixedWidthBinary };

/// One extracted field. Integer columns fill both members so the exact
/// path can accumulate without going through double.
struct Value {
  double f = 0.0;
  std::int64_t i = 0;
};

/// Column layout of a raw file.
///
/// Text form (one line per column): `name:type[:width]` with type `int64`
/// or `float64`. Widths make the file fixed-width binary; without widths the
/// file is newline-terminated delimited text. Lines starting with `#` are
/// comments, except `#delimiter=<c>`.
class Schema {
 public:
  Schema() = default;
  Schema(std::vector<Column> columns, FormatKind format, char delimiter = ',');

  static Schema parse(std::string_view text);
  static Schema load(const std::filesystem::path& path);
  std::string to_string() const;
  void save(const std::filesystem::path& path) const;

  const std::vector<Column>& columns() const { return columns_; }
  std::size_t arity() const { return columns_.size(); }
  FormatKind format() const { return format_; }
  char delimiter() const { return delimiter_; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Bytes per record for fixed-width binary; 0 for text.
  std::size_t record_width() const { return record_width_; }

 private:
  std::vector<Column> columns_;
  FormatKind format_ = FormatKind::kDelimitedText;
  char delimiter_ = ',';
  std::size_t record_width_ = 0;
};

/// Path of the schema sidecar for a data file (`<file>.schema`).
std::filesystem::path schema_path_for(const std::filesystem::path& data_file);
/// Path of the chunk index sidecar for a data file (`<file>.idx`).
std::filesystem::path index_path_for(const std::filesystem::path& data_file);

struct ChunkInfo {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  std::uint64_t tuples = 0;
};

/// Record-aligned partition of a raw file into chunks.
struct ChunkIndex {
  std::uint64_t file_size = 0;
  FormatKind format = FormatKind::kDelimitedText;
  std::vector<ChunkInfo> chunks;

  std::size_t num_chunks() const { return chunks.size(); }
  std::uint64_t total_tuples() const;

  /// Sidecar text: header `file_size N M format`, then `offset length count`
  /// per chunk.
  std::string to_string() const;
  static ChunkIndex parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static ChunkIndex load(const std::filesystem::path& path);
};

/// Cuts the file at record boundaries near multiples of `target_chunk_bytes`:
/// chunk k ends at the first record boundary at or after (k+1)*target, so every
/// chunk is within one record of the target.
ChunkIndex build_chunk_index(const std::filesystem::path& file, const Schema& schema,
                             std::uint64_t target_chunk_bytes);

/// Bytes of one chunk plus lazily discovered record offsets.
class RawChunk {
 public:
  RawChunk() = default;
  RawChunk(std::size_t id, std::string bytes, const Schema* schema);

  std::size_t id() const { return id_; }
  const std::string& bytes() const { return bytes_; }
  std::size_t tuples() const;
  /// Record `i` in file order (without the trailing newline for text).
  std::string_view record(std::size_t i) const;

 private:
  void build_offsets() const;

  std::size_t id_ = 0;
  std::string bytes_;
  const Schema* schema_ = nullptr;
  mutable std::vector<std::uint32_t> offsets_;
  mutable bool offsets_built_ = false;
};

/// Thread-safe positional reads of chunks from one file.
class RawFile {
 public:
  RawFile(std::filesystem::path path, Schema schema);
  ~RawFile();
  RawFile(const RawFile&) = delete;
  RawFile& operator=(const RawFile&) = delete;

  const Schema& schema() const { return schema_; }
  const std::filesystem::path& path() const { return path_; }
  std::uint64_t size() const { return size_; }

  /// Reads chunk `j` and checks that its record count and the arity of its
  /// first record agree with the index.
  RawChunk read_chunk(const ChunkIndex& index, std::size_t j) const;

 private:
  std::filesystem::path path_;
  Schema schema_;
  int fd_ = -1;
  std::uint64_t size_ = 0;
};

/// Parses the fields listed in `wanted` (schema positions) out of one record
/// into `out` (schema arity). Returns false when the record is malformed:
/// wrong field count, or a wanted field that does not parse.
bool parse_record(const Schema& schema, std::string_view record,
                  std::span<const std::size_t> wanted, std::span<Value> out);

/// Uniform random permutation of {0..n-1}, deterministic in `seed`; the order
/// in which chunks are scheduled.
std::vector<std::uint32_t> chunk_permutation(std::uint64_t seed, std::size_t n);

/// Zipf(s) over {1..n} by rejection-inversion; s = 0 is uniform.
class ZipfSampler {
 public:
  ZipfSampler(std::uint64_t n, double exponent);
  std::uint64_t operator()(Rng& rng) const;

  std::uint64_t n() const { return n_; }
  double exponent() const { return exponent_; }

 private:
  double h(double x) const;
  double h_integral(double x) const;
  double h_integral_inverse(double x) const;

  std::uint64_t n_;
  double exponent_;
  double h_integral_x1_ = 0.0;
  double h_integral_n_ = 0.0;
  double s_ = 0.0;
};

enum class SyntheticLayout {
  kZipf,       // column k ~ Zipf(lo + k*(hi-lo)/columns) over [1, value_bound]
  kClustered,  // every column of tuples in block j is j*1000 + noise in [0, noise]
  kRepeated,   // every block is a fresh shuffle of one zipf block, so block totals agree
};

struct SyntheticSpec {
  std::uint64_t tuples = 64 * 4096;
  std::size_t columns = 16;
  double zipf_lo = 0.0;
  double zipf_hi = 4.0;
  std::uint64_t value_bound = 999'999'999;
  std::uint64_t seed = 42;
  FormatKind format = FormatKind::kDelimitedText;
  SyntheticLayout layout = SyntheticLayout::kZipf;
  std::uint64_t cluster_tuples = 4096;  // block size for kClustered
  std::uint64_t cluster_noise = 100;
};

/// Zipf exponent used for column `k`.
double synthetic_zipf_parameter(const SyntheticSpec& spec, std::size_t k);

/// Writes `path` and its schema sidecar. Columns are named a1..aK, int64.
Schema generate_synthetic(const std::filesystem::path& path, const SyntheticSpec& spec);

}  // namespace olaraw
