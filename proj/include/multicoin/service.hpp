#pragma once

// Stateless HTTP facade for the authoring UI. Uploaded and generated assets
// live in a TTL store addressed by content hash, so repeated requests return
// identical payloads and URLs.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "httplib.h"
#include "multicoin/json_io.hpp"
#include "multicoin/media_io.hpp"
#include "multicoin/pipelines.hpp"

namespace multicoin::service {

enum class AssetKind { Flow, Depth, Image };

inline std::string_view kind_prefix(AssetKind kind) {
  switch (kind) {
    case AssetKind::Flow: return "flo";
    case AssetKind::Depth: return "pfm";
    case AssetKind::Image: return "png";
  }
  return "bin";
}

inline std::string_view content_type(AssetKind kind) {
  return kind == AssetKind::Image ? "image/png" : "application/octet-stream";
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

struct Asset {
  AssetKind kind;
  Bytes bytes;
};

/// Thread-safe asset map with expiry. Lookups and inserts sweep expired
/// entries; re-inserting identical content refreshes its deadline.
class AssetStore {
 public:
  using Clock = std::chrono::steady_clock;

  explicit AssetStore(std::chrono::seconds ttl = std::chrono::hours(1),
                      std::function<Clock::time_point()> now = [] { return Clock::now(); })
      : ttl_(ttl), now_(std::move(now)) {}

  std::string put(AssetKind kind, Bytes bytes) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
    std::string id = std::string(kind_prefix(kind)) + "-" + hex;
    std::lock_guard lock(mutex_);
    const auto now = now_();
    sweep(now);
    entries_[id] = Entry{Asset{kind, std::move(bytes)}, now + ttl_};
    return id;
  }

  std::optional<Asset> get(const std::string& id) {
    std::lock_guard lock(mutex_);
    sweep(now_());
    auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    return it->second.asset;
  }

  std::size_t size() {
    std::lock_guard lock(mutex_);
    sweep(now_());
    return entries_.size();
  }

 private:
  struct Entry {
    Asset asset;
    Clock::time_point expires;
  };

  void sweep(Clock::time_point now) {
    std::erase_if(entries_, [&](const auto& kv) { return kv.second.expires <= now; });
  }

  std::chrono::seconds ttl_;
  std::function<Clock::time_point()> now_;
  std::mutex mutex_;
  std::map<std::string, Entry> entries_;
};

struct ServiceOptions {
  std::chrono::seconds ttl = std::chrono::hours(1);
  std::size_t max_upload_bytes = 32u << 20;
  std::string cors_origin = "*";
  std::string ui_dir;  // served at / when set
};

inline std::string asset_url(const std::string& id) { return "/api/assets/" + id; }

/// Detects the asset kind from its magic bytes and checks that it decodes.
inline AssetKind classify_upload(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "PIEH", 4) == 0) {
    (void)decode_flo(bytes);
    return AssetKind::Flow;
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == 'f' || bytes[1] == 'F')) {
    (void)decode_pfm(bytes);
    return AssetKind::Depth;
  }
  (void)decode_frame(bytes);
  return AssetKind::Image;
}

class Service {
 public:
  explicit Service(ServiceOptions options = {})
      : options_(std::move(options)), store_(options_.ttl) {}

  AssetStore& store() { return store_; }

  void install(httplib::Server& server) {
    server.set_payload_max_length(options_.max_upload_bytes);
    server.set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    if (!options_.ui_dir.empty()) server.set_mount_point("/", options_.ui_dir);

    server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(dump_json({{"ok", true}}), "application/json");
    });
    server.Get(R"(/api/assets/([A-Za-z0-9\-]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto asset = store_.get(req.matches[1]);
        if (!asset) fail(ErrorCode::NotFound, "unknown asset " + std::string(req.matches[1]));
        res.set_content(reinterpret_cast<const char*>(asset->bytes.data()), asset->bytes.size(),
                        std::string(content_type(asset->kind)));
      });
    });
    server.Post("/api/assets", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { respond(res, upload(req)); });
    });
    post(server, "/api/trajectory/auto", [this](const Json& body) { return auto_trajectory(body); });
    post(server, "/api/controls/render", [this](const Json& body) { return render(body); });
    post(server, "/api/region/segment", [this](const Json& body) { return segment(body); });
    post(server, "/api/augment", [this](const Json& body) { return augment(body); });
    post(server, "/api/metrics/motion", [this](const Json& body) { return motion(body); });
  }

  // Handlers are public so tests can drive them without sockets.

  Json upload(const httplib::Request& req) {
    std::vector<std::string> ids;
    if (req.is_multipart_form_data()) {
      for (const auto& [name, file] : req.files) ids.push_back(store_bytes(file.content));
    } else {
      ids.push_back(store_bytes(req.body));
    }
    if (ids.empty()) fail(ErrorCode::SchemaViolation, "upload carried no files");
    return {{"id", ids.front()}, {"ids", ids}};
  }

  Json auto_trajectory(const Json& body) {
    AutoTrajectoryConfig cfg;
    cfg.frame_count = field<int>(body, "frames", "");
    cfg.max_pairs = field_or<int>(body, "max_pairs", "", cfg.max_pairs);
    cfg.threshold = field_or<double>(body, "threshold", "", cfg.threshold);
    const auto first = frame_asset(field<std::string>(body, "first", ""));
    const auto last = frame_asset(field<std::string>(body, "last", ""));
    return to_json(multicoin::auto_trajectory(first, last, cfg));
  }

  Json render(const Json& body) {
    const auto manifest = trajectory_set_from_json(member(body, "manifest", ""), "/manifest");
    const auto options = pipelines::render_options_from_json(body.value("cfg", Json()), "/cfg");
    auto rendered = pipelines::render_controls(manifest, options);
    Json flow = Json::array(), depth = Json::array();
    for (auto& png : rendered.flow_png) flow.push_back(asset_url(store_.put(AssetKind::Image, std::move(png))));
    for (auto& png : rendered.depth_png) depth.push_back(asset_url(store_.put(AssetKind::Image, std::move(png))));
    return {{"flow", flow}, {"depth", depth}, {"sidecar", rendered.sidecar}};
  }

  Json segment(const Json& body) {
    const auto flow = flow_asset(field<std::string>(body, "flow", ""));
    const auto anchor = point_field(body, "anchor", "");
    const double frac = field_or<double>(body, "threshold_frac", "", 0.5);
    auto png = pipelines::segment_mask_png(flow, anchor, frac);
    return {{"mask", asset_url(store_.put(AssetKind::Image, std::move(png)))}};
  }

  Json augment(const Json& body) {
    pipelines::AugmentInput in;
    const auto& keys = require_array(member(body, "keyframes", ""), "/keyframes");
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const auto path = child_path("/keyframes", i);
      in.keyframes.push_back({field<int>(keys[i], "index", path), frame_asset(field<std::string>(keys[i], "id", path))});
    }
    in.trajectories = trajectory_set_from_json(member(body, "trajectory", ""), "/trajectory");
    if (body.contains("trajectory_id")) in.trajectory_id = field<int>(body, "trajectory_id", "");
    const auto& region = require_object(member(body, "region", ""), "/region");
    if (region.contains("mask")) {
      in.mask = mask_asset(field<std::string>(region, "mask", "/region"));
    } else {
      in.flow = flow_asset(field<std::string>(region, "flow", "/region"));
      in.threshold_frac = field_or<double>(region, "threshold_frac", "/region", 0.5);
    }
    if (region.contains("anchor")) in.anchor = point_field(region, "anchor", "/region");
    in.source_frame = field_or<int>(body, "source", "", 0);
    if (body.contains("length")) in.length = field<int>(body, "length", "");
    if (body.contains("targets")) {
      const auto& t = require_array(body["targets"], "/targets");
      std::vector<int> slots;
      for (std::size_t i = 0; i < t.size(); ++i) slots.push_back(as<int>(t[i], child_path("/targets", i)));
      in.targets = slots;
    }
    in.num_targets = field_or<int>(body, "num_targets", "", 2);
    in.dropout_p = field_or<double>(body, "dropout_p", "", 0.0);
    in.seed = field_or<std::uint64_t>(body, "seed", "", 0);
    auto out = pipelines::augment(in);
    Json frames = Json::array(), masks = Json::array();
    for (auto& png : out.frame_png) frames.push_back(asset_url(store_.put(AssetKind::Image, std::move(png))));
    for (auto& png : out.mask_png) masks.push_back(asset_url(store_.put(AssetKind::Image, std::move(png))));
    return {{"frames", frames}, {"masks", masks}, {"slots", out.slots}};
  }

  Json motion(const Json& body) {
    const auto manifest = trajectory_set_from_json(member(body, "manifest", ""), "/manifest");
    const auto& ids = require_array(member(body, "flows", ""), "/flows");
    std::vector<FlowField> flows;
    for (std::size_t i = 0; i < ids.size(); ++i) flows.push_back(flow_asset(as<std::string>(ids[i], child_path("/flows", i))));
    return pipelines::evaluate_motion(manifest, flows);
  }

 private:
  template <typename Body>
  static void guarded(httplib::Response& res, Body&& body) {
    try {
      body();
    } catch (const Error& e) {
      res.status = e.code() == ErrorCode::NotFound ? 404 : 400;
      res.set_content(dump_json({{"error", e.what()}}), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(dump_json({{"error", e.what()}}), "application/json");
    }
  }

  static void respond(httplib::Response& res, const Json& payload) {
    res.set_content(dump_json(payload), "application/json");
  }

  template <typename Handler>
  void post(httplib::Server& server, const std::string& route, Handler handler) {
    server.Post(route, [handler](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const Json body = parse_json(req.body);
        require_object(body, "");
        respond(res, handler(body));
      });
    });
  }

  std::string store_bytes(const std::string& raw) {
    Bytes bytes(raw.begin(), raw.end());
    const auto kind = classify_upload(bytes);
    return store_.put(kind, std::move(bytes));
  }

  Asset asset(const std::string& id, AssetKind kind) {
    auto a = store_.get(id);
    if (!a) fail(ErrorCode::NotFound, "unknown asset " + id);
    if (a->kind != kind) fail(ErrorCode::SchemaViolation, "asset " + id + " has the wrong kind");
    return std::move(*a);
  }

  Frame frame_asset(const std::string& id) { return decode_frame(asset(id, AssetKind::Image).bytes); }
  Mask mask_asset(const std::string& id) { return decode_mask_png(asset(id, AssetKind::Image).bytes); }
  FlowField flow_asset(const std::string& id) { return decode_flo(asset(id, AssetKind::Flow).bytes); }

  static Point2 point_field(const Json& j, const std::string& key, const std::string& path) {
    const auto p = child_path(path, key);
    const auto& arr = require_array(member(j, key, path), p);
    if (arr.size() != 2) schema_error(p, "expected [x, y]");
    return {as<double>(arr[0], child_path(p, 0)), as<double>(arr[1], child_path(p, 1))};
  }

  ServiceOptions options_;
  AssetStore store_;
};

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8787;
};

inline BindAddress parse_bind(const std::string& text) {
  const auto colon = text.rfind(':');
  require(colon != std::string::npos && colon > 0, ErrorCode::BadParams, "--bind expects host:port");
  BindAddress out{text.substr(0, colon), 0};
  try {
    out.port = std::stoi(text.substr(colon + 1));
  } catch (const std::exception&) {
    fail(ErrorCode::BadParams, "--bind port is not a number");
  }
  require(out.port >= 0 && out.port <= 65535, ErrorCode::BadParams, "--bind port out of range");
  return out;
}

/// Blocks until the server stops.
inline int serve(const BindAddress& bind, ServiceOptions options) {
  httplib::Server server;
  Service service(std::move(options));
  service.install(server);
  std::fprintf(stderr, "serving on http://%s:%d\n", bind.host.c_str(), bind.port);
  return server.listen(bind.host, bind.port) ? 0 : 2;
}

}  // namespace multicoin::service
