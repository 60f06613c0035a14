#include <chrono>
#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "olaraw/service.hpp"
#include "olaraw/trace.hpp"
#include "support.hpp"

using namespace olaraw;
using json = nlohmann::json;
using test_support::TempDir;

namespace {

struct Fixture {
  TempDir dir;
  std::unique_ptr<Service> service;
  std::unique_ptr<httplib::Client> client;

  explicit Fixture(std::size_t tuples = 20000, double cost_us = 0.0) {
    SyntheticSpec spec;
    spec.tuples = tuples;
    spec.columns = 3;
    generate_synthetic(dir / "d.csv", spec);
    open_dataset(dir / "d.csv");
    test_support::write_file(dir / "notes.txt", "no schema here\n");
    ServiceConfig cfg;
    cfg.port = 0;
    cfg.data_dir = dir.path();
    cfg.delta_ms = 10.0;
    cfg.pipeline.workers = 2;
    cfg.pipeline.per_tuple_cost_us = cost_us;
    service = std::make_unique<Service>(cfg);
    const int port = service->start();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(30, 0);
  }
  ~Fixture() { service->shutdown(); }

  std::string post(const json& body, int expect = 201) {
    auto res = client->Post("/queries", body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == expect);
    const auto j = json::parse(res->body);
    return j.contains("id") ? j["id"].get<std::string>() : "";
  }

  // Reads the event stream, optionally stopping the run after `stop_after`
  // snapshot events.
  std::string events(const std::string& id, int stop_after = -1, const std::string& last_id = "") {
    std::string text;
    int seen = 0;
    bool stopped = false;
    httplib::Headers headers;
    if (!last_id.empty()) headers.emplace("Last-Event-ID", last_id);
    auto res = client->Get("/queries/" + id + "/events", headers, [&](const char* data, std::size_t n) {
      text.append(data, n);
      std::size_t pos = 0;
      seen = 0;
      while ((pos = text.find("event: snapshot", pos)) != std::string::npos) {
        ++seen;
        pos += 5;
      }
      if (stop_after >= 0 && !stopped && seen >= stop_after) {
        stopped = true;
        httplib::Client other("127.0.0.1", service->port());
        auto r = other.Post("/queries/" + id + "/stop");
        REQUIRE(r);
        CHECK(r->status == 200);
        CHECK(json::parse(r->body)["state"] == "STOPPED_BY_USER");
      }
      return true;
    });
    REQUIRE(res);
    CHECK(res->status == 200);
    return text;
  }
};

std::string terminal_state(const std::string& stream) {
  const auto at = stream.find("event: terminal\ndata: ");
  REQUIRE(at != std::string::npos);
  const auto start = at + std::string("event: terminal\ndata: ").size();
  return json::parse(stream.substr(start, stream.find('\n', start) - start))["state"];
}

}  // namespace

TEST_CASE("a run streams snapshots and stops on request") {
  Fixture f(20000, 50.0);
  const auto id = f.post({{"file", "d.csv"},
                          {"sql", "SELECT SUM(a1) FROM t"},
                          {"strategy", "holistic"},
                          {"epsilon", 1e-9},
                          {"delta", 5}});
  CHECK(id == "q1");
  const auto stream = f.events(id, 2);
  CHECK(terminal_state(stream) == "STOPPED_BY_USER");
  const auto first = stream.find("data: ");
  REQUIRE(first != std::string::npos);
  const auto line = stream.substr(first + 6, stream.find('\n', first) - first - 6);
  CHECK_NOTHROW(parse_trace_line(line));
  CHECK(stream.rfind("id: 0\n", 0) == 0);

  auto again = f.client->Post("/queries/" + id + "/stop");
  REQUIRE(again);
  CHECK(again->status == 409);
  CHECK(json::parse(again->body)["state"] == "STOPPED_BY_USER");

  auto info = f.client->Get("/queries/" + id);
  REQUIRE(info);
  CHECK(info->status == 200);
  const auto j = json::parse(info->body);
  CHECK(j["state"] == "STOPPED_BY_USER");
  CHECK(j["strategy"] == "holistic");
  CHECK(j["file"] == "d.csv");
  CHECK(j["snapshots"].get<int>() >= 2);
}

TEST_CASE("a replayed stream resumes after Last-Event-ID") {
  Fixture f;
  const auto id = f.post({{"file", "d.csv"}, {"sql", "SELECT SUM(a1) FROM t"}, {"strategy", "ext"}});
  const auto full = f.events(id);
  CHECK(terminal_state(full) == "EXACT_COMPLETE");
  const auto tail = f.events(id, -1, "0");
  CHECK(tail.find("id: 0\n") == std::string::npos);
  CHECK(terminal_state(tail) == "EXACT_COMPLETE");
}

TEST_CASE("request errors map to status codes") {
  Fixture f(2000);
  auto bad_json = f.client->Post("/queries", "{not json", "application/json");
  REQUIRE(bad_json);
  CHECK(bad_json->status == 400);
  CHECK(json::parse(bad_json->body).contains("error"));
  f.post({{"file", "d.csv"}, {"sql", "SELECT MAX(a1) FROM t"}}, 400);
  f.post({{"file", "d.csv"}, {"sql", "SELECT SUM(zz) FROM t"}}, 400);
  f.post({{"file", "d.csv"}, {"sql", "SELECT SUM(a1) FROM t"}, {"epsilon", 0}}, 400);
  f.post({{"file", "d.csv"}, {"sql", "SELECT SUM(a1) FROM t"}, {"strategy", "fast"}}, 400);
  f.post({{"file", "nope.csv"}, {"sql", "SELECT SUM(a1) FROM t"}}, 404);
  f.post({{"file", "../d.csv"}, {"sql", "SELECT SUM(a1) FROM t"}}, 400);
  f.post({{"sql", "SELECT SUM(a1) FROM t"}}, 400);
  for (const char* path : {"/queries/q99", "/queries/q99/events"}) {
    auto r = f.client->Get(path);
    REQUIRE(r);
    CHECK(r->status == 404);
  }
  auto r = f.client->Post("/queries/q99/stop");
  REQUIRE(r);
  CHECK(r->status == 404);
}

TEST_CASE("files and synopsis listings") {
  Fixture f(4000);
  auto files = f.client->Get("/files");
  REQUIRE(files);
  CHECK(files->status == 200);
  CHECK(files->get_header_value("Access-Control-Allow-Origin") == "*");
  const auto list = json::parse(files->body);
  REQUIRE(list.size() == 1);
  CHECK(list[0]["name"] == "d.csv");
  CHECK(list[0]["indexed"] == true);
  CHECK(list[0]["chunks"] == 64);
  CHECK(list[0]["tuples"] == 4000);
  CHECK(list[0]["columns"] == json::array({"a1", "a2", "a3"}));

  auto empty = f.client->Get("/synopsis");
  REQUIRE(empty);
  CHECK(json::parse(empty->body).empty());

  const json body{{"file", "d.csv"}, {"sql", "SELECT SUM(a1) FROM t"}, {"strategy", "holistic"}, {"epsilon", 1e-9}};
  const auto first = f.post(body);
  CHECK(terminal_state(f.events(first)) == "EXACT_COMPLETE");
  auto syn = f.client->Get("/synopsis?file=d.csv");
  REQUIRE(syn);
  const auto s = json::parse(syn->body);
  REQUIRE(s.size() == 1);
  CHECK(s[0]["chunks_present"] == 64);
  CHECK(s[0]["retained_tuples"] == 4000);
  CHECK(s[0]["columns"] == json::array({"a1"}));

  const auto second = f.post(body);
  f.events(second);
  auto info = f.client->Get("/queries/" + second);
  REQUIRE(info);
  const auto j = json::parse(info->body);
  CHECK(j["chunks_read"] == 0);
  CHECK(j["synopsis_mode"] == "FULL");

  auto pre = f.client->Options("/queries");
  REQUIRE(pre);
  CHECK(pre->status == 204);
}

TEST_CASE("service configuration") {
  ServiceConfig cfg;
  setenv("OLARAW_DATA_DIR", "/tmp/elsewhere", 1);
  cfg.apply_environment();
  unsetenv("OLARAW_DATA_DIR");
  CHECK(cfg.data_dir == "/tmp/elsewhere");
  cfg.port = 70000;
  CHECK_THROWS(cfg.validate());
}
