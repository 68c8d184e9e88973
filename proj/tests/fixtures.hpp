#pragma once

// Fixture set on disk plus an in-process server, shared by the CLI, service
// and acceptance suites.

#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "multicoin/cli.hpp"
#include "multicoin/service.hpp"
#include "support.hpp"

namespace testing_support {

inline CliResult run_cli(std::vector<std::string> args) { return capture(multicoin::cli::run, std::move(args)); }

inline std::string slurp(const std::string& path) {
  const auto b = read_file(path);
  return std::string(b.begin(), b.end());
}

/// moving_square (48x40, 12 px square at (8,10) moving (2,1) for 6 fields),
/// written by `synth`, plus a two-trajectory manifest written by `track`.
struct Fixture {
  TempDir dir;
  std::string data;
  std::string manifest;

  Fixture() : data(dir / "data"), manifest(dir / "manifest.json") {
    run({"synth", "--kind", "moving_square", "--size", "40x48", "--frames", "6", "--square-size", "12", "--vx", "2",
         "--vy", "1", "--origin", "8,10", "--out", data});
    run({"track", "--flows", data, "--seeds", "14,16", "--seeds", "10.5,12.25", "--depths", data, "--out", manifest});
  }

  std::string flow(int i) const { return data + "/" + cli::numbered("flow", static_cast<std::size_t>(i), ".flo"); }
  std::string frame(int i) const { return data + "/" + cli::numbered("frame", static_cast<std::size_t>(i), ".png"); }

  static void run(std::vector<std::string> args) {
    const auto r = run_cli(args);
    if (r.code != 0) throw std::runtime_error("fixture command failed: " + r.err);
  }
};

class TestServer {
 public:
  explicit TestServer(service::ServiceOptions options = {}) : service_(std::move(options)) {
    service_.install(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30);
    return c;
  }
  service::Service& service() { return service_; }

 private:
  httplib::Server server_;
  service::Service service_;
  std::thread thread_;
  int port_ = 0;
};

inline std::string upload(httplib::Client& c, const std::string& bytes) {
  const auto res = c.Post("/api/assets", bytes, "application/octet-stream");
  if (!res || res->status != 200) throw std::runtime_error("upload failed");
  return parse_json(res->body)["id"].get<std::string>();
}

inline std::string fetch(httplib::Client& c, const std::string& url) {
  const auto res = c.Get(url);
  if (!res || res->status != 200) throw std::runtime_error("fetch failed: " + url);
  return res->body;
}

inline httplib::Result post_json(httplib::Client& c, const std::string& route, const Json& body) {
  return c.Post(route, body.dump(), "application/json");
}

/// Each check runs one workflow through the CLI and through HTTP and returns
/// a description of the first difference, or an empty string.
struct Parity {
  Fixture& fx;
  httplib::Client client;

  std::string segment() {
    const auto out = fx.dir / "mask.png";
    if (run_cli({"segment-region", "--flow", fx.flow(0), "--anchor", "14,16", "--out", out}).code != 0) return "cli failed";
    const auto id = upload(client, slurp(fx.flow(0)));
    const auto res = post_json(client, "/api/region/segment", {{"flow", id}, {"anchor", {14, 16}}});
    if (!res || res->status != 200) return "service failed";
    return fetch(client, parse_json(res->body)["mask"].get<std::string>()) == slurp(out) ? "" : "mask bytes differ";
  }

  std::string render() {
    const auto out = fx.dir / "controls";
    if (run_cli({"render-controls", "--manifest", fx.manifest, "--anchors", "--sigma", "6", "--out", out}).code != 0)
      return "cli failed";
    const Json body{{"manifest", parse_json(slurp(fx.manifest))}, {"cfg", {{"anchors", true}, {"sigma", 6}}}};
    const auto res = post_json(client, "/api/controls/render", body);
    if (!res || res->status != 200) return "service failed";
    const auto j = parse_json(res->body);
    if (dump_json(j["sidecar"]) != slurp(out + "/controls.json")) return "sidecar differs";
    for (const char* kind : {"flow", "depth"}) {
      const auto& urls = j[kind];
      if (urls.size() != 7) return std::string(kind) + " frame count differs";
      for (std::size_t i = 0; i < urls.size(); ++i)
        if (fetch(client, urls[i].get<std::string>()) != slurp(out + "/" + cli::numbered(kind, i, ".png")))
          return std::string(kind) + " frame " + std::to_string(i) + " differs";
    }
    return "";
  }

  std::string eval() {
    const auto r = run_cli({"eval-motion", "--manifest", fx.manifest, "--flows", fx.data});
    if (r.code != 0) return "cli failed";
    Json ids = Json::array();
    for (int i = 0; i < 6; ++i) ids.push_back(upload(client, slurp(fx.flow(i))));
    const auto res = post_json(client, "/api/metrics/motion", {{"manifest", parse_json(slurp(fx.manifest))}, {"flows", ids}});
    if (!res || res->status != 200) return "service failed";
    return res->body == r.out ? "" : "report differs";
  }

  std::string augment() {
    const auto out = fx.dir / "augmented";
    const auto r = run_cli({"augment", "--keyframe", "0:" + fx.frame(0), "--keyframe", "6:" + fx.frame(6), "--manifest",
                        fx.manifest, "--flow", fx.flow(0), "--length", "7", "--dropout-p", "0.5", "--seed", "3",
                        "--out", out});
    if (r.code != 0) return "cli failed: " + r.err;
    const Json body{{"keyframes",
                     {{{"index", 0}, {"id", upload(client, slurp(fx.frame(0)))}},
                      {{"index", 6}, {"id", upload(client, slurp(fx.frame(6)))}}}},
                    {"trajectory", parse_json(slurp(fx.manifest))},
                    {"region", {{"flow", upload(client, slurp(fx.flow(0)))}}},
                    {"length", 7},
                    {"dropout_p", 0.5},
                    {"seed", 3}};
    const auto res = post_json(client, "/api/augment", body);
    if (!res || res->status != 200) return "service failed: " + (res ? res->body : std::string("no response"));
    const auto j = parse_json(res->body);
    if (dump_json(j["slots"]) != slurp(out + "/slots.json")) return "slots differ";
    for (std::size_t i = 0; i < 7; ++i) {
      if (fetch(client, j["frames"][i].get<std::string>()) != slurp(out + "/" + cli::numbered("frame", i, ".png")))
        return "frame " + std::to_string(i) + " differs";
      if (fetch(client, j["masks"][i].get<std::string>()) != slurp(out + "/" + cli::numbered("mask", i, ".png")))
        return "mask " + std::to_string(i) + " differs";
    }
    return "";
  }
};

}  // namespace testing_support
