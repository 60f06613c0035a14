#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "olaraw/controller.hpp"
#include "olaraw/pipeline.hpp"

namespace olaraw {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir = ".";
  PipelineConfig pipeline;
  double epsilon = 0.05;
  double delta_ms = 1000.0;
  double confidence = 0.95;
  std::uint64_t synopsis_budget_bytes = 64ull << 20;

  /// OLARAW_DATA_DIR, when set, replaces data_dir.
  void apply_environment();
  void validate() const;
};

/// HTTP control service: starts runs, streams their snapshots as
/// server-sent events, stops them, and reports files and synopses.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  /// Blocks serving on the calling thread.
  void run();
  void shutdown();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace olaraw
