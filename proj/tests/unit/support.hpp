#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "olaraw/controller.hpp"
#include "olaraw/raw_store.hpp"

namespace test_support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "olaraw-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes a text file whose chunk j holds rows[j] (one record per row, all
// columns comma-separated) and an index with exactly those chunk boundaries.
inline olaraw::Dataset chunked_text_dataset(const fs::path& file, const std::vector<std::string>& columns,
                                            const std::vector<std::vector<std::vector<long long>>>& chunks) {
  std::string schema_text;
  for (const auto& c : columns) schema_text += c + ":int64\n";
  write_file(olaraw::schema_path_for(file), schema_text);
  std::string body;
  olaraw::ChunkIndex index;
  for (const auto& rows : chunks) {
    olaraw::ChunkInfo info;
    info.offset = body.size();
    for (const auto& r : rows) {
      for (std::size_t k = 0; k < r.size(); ++k) {
        if (k) body += ',';
        body += std::to_string(r[k]);
      }
      body += '\n';
    }
    info.length = body.size() - info.offset;
    info.tuples = rows.size();
    index.chunks.push_back(info);
  }
  write_file(file, body);
  index.file_size = body.size();
  index.format = olaraw::FormatKind::kDelimitedText;
  index.save(olaraw::index_path_for(file));
  return olaraw::open_dataset(file);
}

// Single-column convenience: chunk j holds the values vals[j].
inline olaraw::Dataset single_column_dataset(const fs::path& file, const std::vector<std::vector<long long>>& vals) {
  std::vector<std::vector<std::vector<long long>>> chunks;
  for (const auto& c : vals) {
    std::vector<std::vector<long long>> rows;
    for (auto v : c) rows.push_back({v});
    chunks.push_back(rows);
  }
  return chunked_text_dataset(file, {"x"}, chunks);
}

}  // namespace test_support
