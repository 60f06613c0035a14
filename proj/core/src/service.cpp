#include "olaraw/service.hpp"

#include <cstdlib>
#include <atomic>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "olaraw/error.hpp"
#include "olaraw/query.hpp"
#include "olaraw/strategies.hpp"
#include "olaraw/synopsis.hpp"
#include "olaraw/trace.hpp"

namespace olaraw {

using nlohmann::json;

void ServiceConfig::apply_environment() {
  if (const char* dir = std::getenv("OLARAW_DATA_DIR"); dir && *dir) data_dir = dir;
}

void ServiceConfig::validate() const {
  if (delta_ms < 1.0) throw Error("delta must be at least 1 ms");
  if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  if (!(confidence > 0.0 && confidence <= 1.0)) throw Error("confidence must be in (0, 1]");
  if (port < 0 || port > 65535) throw Error("port out of range");
  pipeline.validate();
}

namespace {

struct FileState {
  std::unique_ptr<Dataset> data;
  Synopsis synopsis;
  std::mutex synopsis_mutex;
};

struct RunEntry {
  std::string file;
  std::unique_ptr<QueryRun> run;
};

json error_body(const std::string& msg) { return json{{"error", msg}}; }

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

bool safe_name(const std::string& name) {
  if (name.empty()) return false;
  const std::filesystem::path p(name);
  if (p.is_absolute()) return false;
  for (const auto& part : p)
    if (part == "..") return false;
  return true;
}

}  // namespace

struct Service::Impl {
  explicit Impl(ServiceConfig c) : config(std::move(c)) {}

  ServiceConfig config;
  httplib::Server server;

  std::mutex mu;
  std::map<std::string, std::unique_ptr<FileState>> files;
  std::map<std::string, std::shared_ptr<RunEntry>> runs;
  std::uint64_t next_id = 1;

  FileState& file_state(const std::string& name) {
    std::lock_guard lk(mu);
    auto it = files.find(name);
    if (it != files.end()) return *it->second;
    auto st = std::make_unique<FileState>();
    st->data = std::make_unique<Dataset>(open_dataset(config.data_dir / name));
    st->synopsis = Synopsis(config.synopsis_budget_bytes, st->data->num_chunks());
    auto& ref = *st;
    files.emplace(name, std::move(st));
    return ref;
  }

  std::shared_ptr<RunEntry> find_run(const std::string& id) {
    std::lock_guard lk(mu);
    auto it = runs.find(id);
    return it == runs.end() ? nullptr : it->second;
  }

  json run_summary(const std::string& id, const RunEntry& e) {
    const auto& run = *e.run;
    json j{{"id", id},
           {"file", e.file},
           {"sql", to_sql(run.query())},
           {"strategy", std::string(to_token(run.strategy()))},
           {"state", std::string(to_string(run.state()))},
           {"epsilon", run.query().epsilon},
           {"delta", run.query().delta_ms},
           {"snapshots", run.snapshot_count()}};
    const auto n = run.snapshot_count();
    if (n > 0) {
      auto last = run.wait_snapshots(n - 1, 0);
      if (!last.empty()) j["last"] = format_trace_line(last.back());
    }
    if (auto r = run.result()) {
      j["chunks_read"] = r->chunks_read;
      j["bytes_read"] = r->bytes_read;
      j["tuples_extracted"] = r->tuples_extracted;
      j["elapsed_ms"] = r->elapsed_ms;
      if (!r->error.empty()) j["error"] = r->error;
      if (r->synopsis_mode) j["synopsis_mode"] = std::string(to_string(*r->synopsis_mode));
    }
    return j;
  }

  void post_query(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      return reply(res, 400, error_body(std::string("malformed JSON: ") + e.what()));
    }
    if (!body.is_object() || !body.contains("sql") || !body["sql"].is_string())
      return reply(res, 400, error_body("missing 'sql'"));
    if (!body.contains("file") || !body["file"].is_string())
      return reply(res, 400, error_body("missing 'file'"));
    const std::string file = body["file"];
    if (!safe_name(file)) return reply(res, 400, error_body("invalid file name"));
    if (!std::filesystem::exists(config.data_dir / file))
      return reply(res, 404, error_body("no such file: " + file));

    FileState* st = nullptr;
    AggregateQuery q;
    RunOptions opt;
    try {
      st = &file_state(file);
      q = parse_query(body["sql"].get<std::string>(), &st->data->schema);
      q.epsilon = body.value("epsilon", config.epsilon);
      q.delta_ms = body.value("delta", config.delta_ms);
      q.confidence = body.value("confidence", config.confidence);
      q.validate();
      opt.strategy = parse_strategy(body.value("strategy", std::string("resource")));
      opt.pipeline = config.pipeline;
      opt.pipeline.workers = body.value("threads", config.pipeline.workers);
      opt.pipeline.seed = body.value("seed", config.pipeline.seed);
      opt.pipeline.validate();
      opt.synopsis = &st->synopsis;
    } catch (const Error& e) {
      return reply(res, 400, error_body(e.what()));
    } catch (const json::exception& e) {
      return reply(res, 400, error_body(e.what()));
    }

    std::string id;
    {
      std::lock_guard lk(mu);
      id = "q" + std::to_string(next_id++);
    }
    auto entry = std::make_shared<RunEntry>();
    entry->file = file;
    entry->run = std::make_unique<QueryRun>(id, *st->data, q, opt, &st->synopsis_mutex);
    {
      std::lock_guard lk(mu);
      runs.emplace(id, entry);
    }
    reply(res, 201, json{{"id", id}});
  }

  void events(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto entry = find_run(id);
    if (!entry) return reply(res, 404, error_body("unknown query " + id));
    std::size_t from = 0;
    if (req.has_header("Last-Event-ID")) {
      try {
        from = std::stoull(req.get_header_value("Last-Event-ID")) + 1;
      } catch (const std::exception&) {
        from = 0;
      }
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [entry, next = from](std::size_t, httplib::DataSink& sink) mutable {
          const auto& run = *entry->run;
          const bool terminal = is_terminal(run.state());
          const auto snaps = run.wait_snapshots(next, terminal ? 0 : 250);
          for (const auto& s : snaps) {
            const std::string ev = "id: " + std::to_string(next) + "\nevent: snapshot\ndata: " +
                                   format_trace_line(s) + "\n\n";
            if (!sink.write(ev.data(), ev.size())) return false;
            ++next;
          }
          if (terminal && next >= run.snapshot_count()) {
            json t{{"state", std::string(to_string(run.state()))}};
            if (auto r = run.result(); r && !r->error.empty()) t["error"] = r->error;
            const std::string ev = "event: terminal\ndata: " + t.dump() + "\n\n";
            sink.write(ev.data(), ev.size());
            sink.done();
          }
          return true;
        });
  }

  void stop(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto entry = find_run(id);
    if (!entry) return reply(res, 404, error_body("unknown query " + id));
    const auto before = entry->run->state();
    if (is_terminal(before)) return reply(res, 409, json{{"state", std::string(to_string(before))}});
    const auto after = entry->run->stop();
    reply(res, 200, json{{"state", std::string(to_string(after))}});
  }

  void get_query(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto entry = find_run(id);
    if (!entry) return reply(res, 404, error_body("unknown query " + id));
    reply(res, 200, run_summary(id, *entry));
  }

  void list_files(httplib::Response& res) {
    json out = json::array();
    std::error_code ec;
    std::vector<std::filesystem::path> names;
    for (const auto& ent : std::filesystem::directory_iterator(config.data_dir, ec)) {
      if (!ent.is_regular_file()) continue;
      const auto p = ent.path();
      if (p.extension() == ".schema" || p.extension() == ".idx" || p.extension() == ".synopsis") continue;
      if (!std::filesystem::exists(schema_path_for(p))) continue;
      names.push_back(p);
    }
    std::sort(names.begin(), names.end());
    for (const auto& p : names) {
      json f{{"name", p.filename().string()}, {"size", std::filesystem::file_size(p)}};
      const auto idx = index_path_for(p);
      f["indexed"] = std::filesystem::exists(idx);
      if (f["indexed"]) {
        try {
          const auto ci = ChunkIndex::load(idx);
          f["chunks"] = ci.num_chunks();
          f["tuples"] = ci.total_tuples();
          f["index_stale"] = ci.file_size != std::filesystem::file_size(p);
        } catch (const Error& e) {
          f["index_error"] = e.what();
        }
      }
      try {
        const auto schema = Schema::load(schema_path_for(p));
        json cols = json::array();
        for (const auto& c : schema.columns()) cols.push_back(c.name);
        f["columns"] = cols;
      } catch (const Error& e) {
        f["schema_error"] = e.what();
      }
      out.push_back(f);
    }
    reply(res, 200, out);
  }

  void synopsis(const httplib::Request& req, httplib::Response& res) {
    const std::string only = req.has_param("file") ? req.get_param_value("file") : "";
    json out = json::array();
    std::lock_guard lk(mu);
    for (auto& [name, st] : files) {
      if (!only.empty() && name != only) continue;
      std::lock_guard slk(st->synopsis_mutex);
      const auto s = st->synopsis.summary();
      out.push_back(json{{"file", name},
                         {"budget_bytes", s.budget_bytes},
                         {"budget_tuples", s.budget_tuples},
                         {"retained_tuples", s.retained_tuples},
                         {"chunks_present", s.chunks_present},
                         {"chunks_total", s.chunks_total},
                         {"columns", s.columns},
                         {"origin", s.origin}});
    }
    reply(res, 200, out);
  }

  void install_routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type, Last-Event-ID"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Post("/queries", [this](const auto& req, auto& res) { post_query(req, res); });
    server.Get(R"(/queries/([^/]+)/events)", [this](const auto& req, auto& res) { events(req, res); });
    server.Post(R"(/queries/([^/]+)/stop)", [this](const auto& req, auto& res) { stop(req, res); });
    server.Get(R"(/queries/([^/]+))", [this](const auto& req, auto& res) { get_query(req, res); });
    server.Get("/files", [this](const auto&, auto& res) { list_files(res); });
    server.Get("/synopsis", [this](const auto& req, auto& res) { synopsis(req, res); });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string msg = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        msg = e.what();
      } catch (...) {
      }
      reply(res, 500, error_body(msg));
    });
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
  impl_->config.validate();
  impl_->install_routes();
}

Service::~Service() {
  shutdown();
  std::lock_guard lk(impl_->mu);
  for (auto& [id, e] : impl_->runs) e->run->stop();
}

int Service::start() {
  auto& s = impl_->server;
  if (impl_->config.port == 0) {
    port_ = s.bind_to_any_port(impl_->config.host);
  } else {
    port_ = s.bind_to_port(impl_->config.host, impl_->config.port) ? impl_->config.port : -1;
  }
  if (port_ <= 0) throw IoError("cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  return port_;
}

void Service::run() {
  if (!thread_.joinable()) start();
  thread_.join();
}

void Service::shutdown() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace olaraw
