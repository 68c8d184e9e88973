#pragma once

// Analytic fixtures standing in for real clips: every flow field is known
// exactly, and the rendered frames are consistent with it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <variant>
#include <vector>

#include "multicoin/error.hpp"
#include "multicoin/raster.hpp"

namespace multicoin::synthetic {

struct Uniform {
  double u = 0.0;
  double v = 0.0;
};

/// Rigid rotation about `center`; the vector at p is omega * perp(p - center).
struct Rotation {
  Point2 center;
  double omega = 0.0;
};

/// Textured square translating by an integer `velocity` per frame over a flat
/// background. `origin` is the top-left corner at frame 0; when absent the
/// path is centered in the frame.
struct MovingSquare {
  int size = 4;
  int vx = 1;
  int vy = 0;
  Rgb background{40, 40, 40};
  std::optional<int> origin_x;
  std::optional<int> origin_y;
  std::uint64_t texture_seed = 0;
};

using Kind = std::variant<Uniform, Rotation, MovingSquare>;

inline constexpr float kNearDepth = 1.0f;
inline constexpr float kFarDepth = 4.0f;

struct Clip {
  std::vector<FlowField> flows;  // flows[t] moves frame t to frame t+1
  std::vector<Frame> frames;     // flows.size() + 1 entries
  std::vector<DepthMap> depths;  // one per frame
  std::vector<Mask> footprints;  // moving_square only: square coverage per frame
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline Rgb hashed_texel(std::uint64_t seed, int x, int y) {
  const auto h = splitmix64(seed ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32 |
                                    static_cast<std::uint32_t>(y)));
  return {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8),
          static_cast<std::uint8_t>(h >> 16)};
}

/// Smooth, non-periodic-looking test pattern defined over the plane.
inline Rgb procedural(double x, double y) {
  auto channel = [](double value) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
  };
  return {channel(128 + 70 * std::sin(0.45 * x + 0.2 * y) + 40 * std::cos(0.31 * y)),
          channel(128 + 60 * std::cos(0.27 * x - 0.52 * y)),
          channel(128 + 50 * std::sin(0.13 * x * 0.7 + 0.61 * y) + 50 * std::sin(0.8 * x))};
}

inline int centered_origin(int extent, int size, int velocity, int frames) {
  const int travel = velocity * frames;
  return (extent - size - std::abs(travel)) / 2 - std::min(0, travel);
}

}  // namespace detail

/// `frames` is the number of flow fields; frame and depth sequences carry one
/// more entry.
inline Clip make_clip(const Kind& kind, int width, int height, int frames) {
  require(width >= 1 && height >= 1, ErrorCode::BadParams, "synthetic size must be positive");
  require(frames >= 1, ErrorCode::BadParams, "synthetic clip needs at least one flow field");
  Clip clip;

  if (const auto* k = std::get_if<Uniform>(&kind)) {
    require(std::isfinite(k->u) && std::isfinite(k->v), ErrorCode::BadParams, "uniform flow must be finite");
    const FlowVector f{static_cast<float>(k->u), static_cast<float>(k->v)};
    for (int t = 0; t <= frames; ++t) {
      if (t < frames) clip.flows.emplace_back(width, height, f);
      Frame frame(width, height);
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) frame.at(x, y) = detail::procedural(x - t * k->u, y - t * k->v);
      clip.frames.push_back(std::move(frame));
      clip.depths.emplace_back(width, height, kFarDepth);
    }
  } else if (const auto* k = std::get_if<Rotation>(&kind)) {
    require(std::isfinite(k->omega) && std::isfinite(k->center.x) && std::isfinite(k->center.y),
            ErrorCode::BadParams, "rotation parameters must be finite");
    FlowField flow(width, height);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        flow.at(x, y) = {static_cast<float>(-k->omega * (y - k->center.y)),
                         static_cast<float>(k->omega * (x - k->center.x))};
    for (int t = 0; t <= frames; ++t) {
      if (t < frames) clip.flows.push_back(flow);
      const double c = std::cos(-k->omega * t), s = std::sin(-k->omega * t);
      Frame frame(width, height);
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const double dx = x - k->center.x, dy = y - k->center.y;
          frame.at(x, y) = detail::procedural(k->center.x + c * dx - s * dy, k->center.y + s * dx + c * dy);
        }
      }
      clip.frames.push_back(std::move(frame));
      clip.depths.emplace_back(width, height, kFarDepth);
    }
  } else {
    const auto& sq = std::get<MovingSquare>(kind);
    require(sq.size >= 1 && sq.size <= std::min(width, height), ErrorCode::BadParams,
            "square size must be in [1, min(width, height)]");
    const int ox = sq.origin_x.value_or(detail::centered_origin(width, sq.size, sq.vx, frames));
    const int oy = sq.origin_y.value_or(detail::centered_origin(height, sq.size, sq.vy, frames));
    for (int t = 0; t <= frames; ++t) {
      const int left = ox + t * sq.vx, top = oy + t * sq.vy;
      require(left >= 0 && top >= 0 && left + sq.size <= width && top + sq.size <= height,
              ErrorCode::BadParams, "moving square leaves the frame at t=" + std::to_string(t));
    }
    const FlowVector velocity{static_cast<float>(sq.vx), static_cast<float>(sq.vy)};
    for (int t = 0; t <= frames; ++t) {
      const int left = ox + t * sq.vx, top = oy + t * sq.vy;
      Frame frame(width, height, sq.background);
      DepthMap depth(width, height, kFarDepth);
      Mask footprint(width, height, 0);
      FlowField flow(width, height);
      for (int ly = 0; ly < sq.size; ++ly) {
        for (int lx = 0; lx < sq.size; ++lx) {
          const int x = left + lx, y = top + ly;
          frame.at(x, y) = detail::hashed_texel(sq.texture_seed, lx, ly);
          depth.at(x, y) = kNearDepth;
          footprint.at(x, y) = 1;
          flow.at(x, y) = velocity;
        }
      }
      if (t < frames) clip.flows.push_back(std::move(flow));
      clip.frames.push_back(std::move(frame));
      clip.depths.push_back(std::move(depth));
      clip.footprints.push_back(std::move(footprint));
    }
  }
  return clip;
}

}  // namespace multicoin::synthetic
