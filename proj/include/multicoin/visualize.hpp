#pragma once

// RGB encodings of flow and depth, and their inverses.
//
// Flow: hue = direction, value = |f| / mag_max (saturating), saturation 1, so
// zero motion is black. Depth: red (near) -> white (reference) -> blue (far),
// leaving black free to mean "no control".

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

#include "multicoin/error.hpp"
#include "multicoin/raster.hpp"

namespace multicoin {

struct FlowColorConfig {
  double mag_max = 20.0;

  void validate() const {
    require(std::isfinite(mag_max) && mag_max > 0.0, ErrorCode::BadParams, "mag_max must be > 0");
  }
};

struct DepthColorConfig {
  double d_ref = 1.0;
  double d_scale = 3.0;

  void validate() const {
    require(std::isfinite(d_ref), ErrorCode::BadParams, "d_ref must be finite");
    require(std::isfinite(d_scale) && d_scale > 0.0, ErrorCode::BadParams, "d_scale must be > 0");
  }

  /// Reference at the mean, full color at three means of deviation, so the
  /// farthest anchor (4 mu) lands exactly on pure blue.
  static DepthColorConfig from_mean(double mu) {
    if (!(std::isfinite(mu) && mu > 0.0)) return {};
    return {mu, 3.0 * mu};
  }
};

namespace detail {

inline std::uint8_t quantize(double unit) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(unit, 0.0, 1.0) * 255.0));
}

}  // namespace detail

/// Hue of a flow vector in degrees, in [0, 360).
inline double flow_hue_degrees(double u, double v) {
  double hue = std::atan2(v, u) * (180.0 / std::numbers::pi);
  if (hue < 0.0) hue += 360.0;
  if (hue >= 360.0) hue -= 360.0;
  return hue;
}

inline Rgb flow_color(FlowVector f, const FlowColorConfig& cfg) {
  const double u = f.u, v = f.v;
  const double value = std::min(std::hypot(u, v) / cfg.mag_max, 1.0);
  if (value == 0.0) return {};
  const double sector = flow_hue_degrees(u, v) / 60.0;
  const int i = std::min(static_cast<int>(std::floor(sector)), 5);
  const double frac = sector - i;
  const double rising = value * frac, falling = value * (1.0 - frac);
  double r = 0, g = 0, b = 0;
  switch (i) {
    case 0: r = value, g = rising; break;
    case 1: r = falling, g = value; break;
    case 2: g = value, b = rising; break;
    case 3: g = falling, b = value; break;
    case 4: r = rising, b = value; break;
    default: r = value, b = falling; break;
  }
  return {detail::quantize(r), detail::quantize(g), detail::quantize(b)};
}

inline Frame flow_to_rgb(const FlowField& flow, const FlowColorConfig& cfg = {}) {
  cfg.validate();
  Frame out(flow.width(), flow.height());
  std::transform(flow.pixels().begin(), flow.pixels().end(), out.pixels().begin(),
                 [&](FlowVector f) { return flow_color(f, cfg); });
  return out;
}

inline FlowVector flow_from_color(Rgb px, const FlowColorConfig& cfg) {
  const int hi = std::max({px.r, px.g, px.b});
  const int lo = std::min({px.r, px.g, px.b});
  if (hi == 0) return {};
  const double chroma = hi - lo;
  double hue = 0.0;
  if (chroma > 0.0) {
    if (hi == px.r)
      hue = std::fmod((px.g - px.b) / chroma + 6.0, 6.0);
    else if (hi == px.g)
      hue = (px.b - px.r) / chroma + 2.0;
    else
      hue = (px.r - px.g) / chroma + 4.0;
  }
  const double angle = hue * (std::numbers::pi / 3.0);
  const double mag = hi / 255.0 * cfg.mag_max;
  return {static_cast<float>(mag * std::cos(angle)), static_cast<float>(mag * std::sin(angle))};
}

inline FlowField rgb_to_flow(const Frame& frame, const FlowColorConfig& cfg = {}) {
  cfg.validate();
  FlowField out(frame.width(), frame.height());
  std::transform(frame.pixels().begin(), frame.pixels().end(), out.pixels().begin(),
                 [&](Rgb px) { return flow_from_color(px, cfg); });
  return out;
}

inline Rgb depth_color(double depth, const DepthColorConfig& cfg) {
  const double s = std::clamp((depth - cfg.d_ref) / cfg.d_scale, -1.0, 1.0);
  if (s < 0.0) {
    const auto fade = detail::quantize(1.0 + s);
    return {255, fade, fade};
  }
  const auto fade = detail::quantize(1.0 - s);
  return {fade, fade, 255};
}

inline Frame depth_to_rgb(const DepthMap& depth, const DepthColorConfig& cfg) {
  cfg.validate();
  Frame out(depth.width(), depth.height());
  std::transform(depth.pixels().begin(), depth.pixels().end(), out.pixels().begin(),
                 [&](float d) { return depth_color(d, cfg); });
  return out;
}

/// Sparse variant: pixels outside `valid` stay black.
inline Frame depth_to_rgb(const DepthMap& depth, const Mask& valid, const DepthColorConfig& cfg) {
  require_same_shape(depth, valid, "depth_to_rgb mask");
  cfg.validate();
  Frame out(depth.width(), depth.height());
  for (std::size_t i = 0; i < depth.size(); ++i)
    if (valid.pixels()[i]) out.pixels()[i] = depth_color(depth.pixels()[i], cfg);
  return out;
}

struct DecodedDepth {
  DepthMap depth;
  Mask valid;
};

inline constexpr int kRampTolerance = 8;

/// Black (within tolerance) decodes as invalid; anything else must lie on the
/// red-white-blue ramp or AmbiguousColor is raised.
inline DecodedDepth rgb_to_depth(const Frame& frame, const DepthColorConfig& cfg) {
  cfg.validate();
  DecodedDepth out{DepthMap(frame.width(), frame.height()), Mask(frame.width(), frame.height())};
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      const Rgb px = frame.at(x, y);
      const int r = px.r, g = px.g, b = px.b;
      if (std::max({r, g, b}) <= kRampTolerance) continue;
      double s = 0.0;
      if (r >= b) {
        if (r < 255 - kRampTolerance || std::abs(g - b) > kRampTolerance)
          fail(ErrorCode::AmbiguousColor, "pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                                              ") is not on the depth ramp");
        s = (g + b) / 510.0 - 1.0;
      } else {
        if (b < 255 - kRampTolerance || std::abs(r - g) > kRampTolerance)
          fail(ErrorCode::AmbiguousColor, "pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                                              ") is not on the depth ramp");
        s = 1.0 - (r + g) / 510.0;
      }
      out.depth.at(x, y) = static_cast<float>(cfg.d_ref + s * cfg.d_scale);
      out.valid.at(x, y) = 1;
    }
  }
  return out;
}

/// Dense-map default: reference and scale from the map's mean (see
/// DepthColorConfig::from_mean).
inline DepthColorConfig default_depth_config(const DepthMap& depth) {
  const double sum = std::accumulate(depth.pixels().begin(), depth.pixels().end(), 0.0);
  return DepthColorConfig::from_mean(sum / static_cast<double>(depth.size()));
}

}  // namespace multicoin
