#pragma once

// Rasterization of trajectories into sparse RGB point controls: Gaussian
// falloff for flow, flat disks for depth, and border depth anchors giving a
// relative-depth reference.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "multicoin/error.hpp"
#include "multicoin/parallel.hpp"
#include "multicoin/raster.hpp"
#include "multicoin/trajectory.hpp"
#include "multicoin/visualize.hpp"

namespace multicoin {

struct SplatConfig {
  double sigma = 10.0;
  double truncate = 3.0;  // in multiples of sigma
  double disk_radius = 10.0;

  void validate() const {
    require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::BadParams, "sigma must be > 0");
    require(std::isfinite(truncate) && truncate >= 1.0, ErrorCode::BadParams, "truncate must be >= 1");
    require(std::isfinite(disk_radius) && disk_radius >= 1.0, ErrorCode::BadParams, "disk_radius must be >= 1");
  }
};

struct Anchor {
  Point2 position;
  double depth = 0.0;

  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct AnchorSet {
  std::vector<Anchor> anchors;
  double mu = 0.0;
};

struct AnchorRatio {
  int num;
  int den;
};

/// Multiples of the mean used for anchors, in anchor order.
inline constexpr AnchorRatio kAnchorRatios[6] = {{1, 4}, {1, 3}, {1, 2}, {2, 1}, {3, 1}, {4, 1}};

/// Six anchors from the mean mu of the user's depth samples: mu/4, mu/3, mu/2
/// down the left border (top, middle, bottom) and 2mu, 3mu, 4mu down the right
/// border, each inset by `inset` pixels.
inline AnchorSet depth_anchors(std::span<const double> user_depths, int width, int height, double inset = 10.0) {
  require(!user_depths.empty(), ErrorCode::EmptyInput, "depth anchors need at least one depth sample");
  require(width >= 1 && height >= 1, ErrorCode::BadParams, "anchor frame must be non-empty");
  for (double d : user_depths) {
    require(std::isfinite(d), ErrorCode::NonFiniteValue, "depth sample is not finite");
    require(d > 0.0, ErrorCode::NonPositiveDepth, "depth samples must be positive");
  }
  const double mu = std::accumulate(user_depths.begin(), user_depths.end(), 0.0) /
                    static_cast<double>(user_depths.size());

  // Small frames pull the ring inward rather than leaving the bounds.
  const double ix = std::min(inset, std::floor((width - 1) / 2.0));
  const double iy = std::min(inset, std::floor((height - 1) / 2.0));
  const double left = ix, right = width - 1 - ix;
  const double rows[3] = {iy, std::floor((height - 1) / 2.0), height - 1 - iy};

  AnchorSet set{{}, mu};
  for (int i = 0; i < 6; ++i)
    set.anchors.push_back({{i < 3 ? left : right, rows[i % 3]}, mu * kAnchorRatios[i].num / kAnchorRatios[i].den});
  return set;
}

namespace detail {

struct SplatSource {
  Point2 position;
  FlowSample flow;
  double depth = 0.0;
};

inline std::vector<const Trajectory*> sorted_by_id(const TrajectorySet& set) {
  std::vector<const Trajectory*> out;
  for (const auto& traj : set.trajectories) out.push_back(&traj);
  std::stable_sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->id < b->id; });
  return out;
}

/// Index of the nearest source (first wins on ties), or -1 when there is none
/// within sqrt(limit2).
inline int nearest_within(std::span<const SplatSource> sources, double px, double py, double limit2,
                          double& best2) {
  int best = -1;
  best2 = 0.0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const double dx = px - sources[i].position.x, dy = py - sources[i].position.y;
    const double d2 = dx * dx + dy * dy;
    if (best < 0 || d2 < best2) {
      best = static_cast<int>(i);
      best2 = d2;
    }
  }
  return best >= 0 && best2 <= limit2 ? best : -1;
}

}  // namespace detail

/// Winner-take-all Gaussian spread: each pixel takes the vector of its nearest
/// trajectory point at frame t (lower id on ties), scaled by
/// exp(-d^2 / 2 sigma^2), and zero beyond truncate * sigma.
inline FlowField splat_flow_gaussian(const TrajectorySet& set, int t, const SplatConfig& cfg = {}) {
  cfg.validate();
  std::vector<detail::SplatSource> sources;
  for (const auto* traj : detail::sorted_by_id(set)) {
    const auto* p = traj->at(t);
    if (!p) continue;
    if (!p->flow)
      fail(ErrorCode::MissingFlowSample,
           "trajectory " + std::to_string(traj->id) + " has no flow sample at t=" + std::to_string(t));
    sources.push_back({p->position(), *p->flow, 0.0});
  }

  FlowField out(set.width, set.height);
  if (sources.empty()) return out;
  const double reach = cfg.truncate * cfg.sigma;
  const double two_sigma2 = 2.0 * cfg.sigma * cfg.sigma;
  for (int y = 0; y < set.height; ++y) {
    for (int x = 0; x < set.width; ++x) {
      double d2 = 0.0;
      const int j = detail::nearest_within(sources, x, y, reach * reach, d2);
      if (j < 0) continue;
      const double w = std::exp(-d2 / two_sigma2);
      const auto& f = sources[static_cast<std::size_t>(j)].flow;
      out.at(x, y) = {static_cast<float>(w * f.u), static_cast<float>(w * f.v)};
    }
  }
  return out;
}

struct DepthSplat {
  DepthMap depth;
  Mask valid;
};

/// Flat disks: each pixel copies the depth of its nearest point within
/// disk_radius. Trajectory points (by id) precede anchors on ties.
inline DepthSplat splat_depth_disk(const TrajectorySet& set, const AnchorSet* anchors, int t,
                                   const SplatConfig& cfg = {}) {
  cfg.validate();
  std::vector<detail::SplatSource> sources;
  for (const auto* traj : detail::sorted_by_id(set)) {
    const auto* p = traj->at(t);
    if (!p) continue;
    if (!p->depth)
      fail(ErrorCode::MissingDepthSample,
           "trajectory " + std::to_string(traj->id) + " has no depth sample at t=" + std::to_string(t));
    sources.push_back({p->position(), {}, *p->depth});
  }
  if (anchors)
    for (const auto& a : anchors->anchors) sources.push_back({a.position, {}, a.depth});

  DepthSplat out{DepthMap(set.width, set.height), Mask(set.width, set.height)};
  if (sources.empty()) return out;
  const double r2 = cfg.disk_radius * cfg.disk_radius;
  for (int y = 0; y < set.height; ++y) {
    for (int x = 0; x < set.width; ++x) {
      double d2 = 0.0;
      const int j = detail::nearest_within(sources, x, y, r2, d2);
      if (j < 0) continue;
      out.depth.at(x, y) = static_cast<float>(sources[static_cast<std::size_t>(j)].depth);
      out.valid.at(x, y) = 1;
    }
  }
  return out;
}

struct ControlConfig {
  SplatConfig splat;
  FlowColorConfig flow;
  /// Overrides the mean-derived colormap; ignored when anchors are rendered.
  std::optional<DepthColorConfig> depth;
};

struct ControlClip {
  std::vector<Frame> flow_frames;
  std::vector<Frame> depth_frames;
  FlowColorConfig flow_cfg;
  DepthColorConfig depth_cfg;
  SplatConfig splat_cfg;
};

/// Renders `frame_count` flow and depth control frames. Trajectories carrying
/// no depth at all only contribute flow. With anchors the depth colormap is
/// d_ref = mu, d_scale = 3 mu; otherwise the configured map, or the same rule
/// applied to the mean of all depth samples.
inline ControlClip render_control_clip(const TrajectorySet& set, const AnchorSet* anchors, int frame_count,
                                       const ControlConfig& cfg = {}) {
  require(frame_count >= 1, ErrorCode::BadParams, "control clip needs frame_count >= 1");
  set.validate();
  cfg.splat.validate();
  cfg.flow.validate();

  TrajectorySet depth_set{set.width, set.height, set.frame_count, {}};
  std::vector<double> samples;
  for (const auto& traj : set.trajectories) {
    const bool any_depth = std::any_of(traj.points.begin(), traj.points.end(), [](auto& p) { return p.depth; });
    if (!any_depth) continue;
    depth_set.trajectories.push_back(traj);
    for (const auto& p : traj.points)
      if (p.depth) samples.push_back(*p.depth);
  }

  DepthColorConfig depth_cfg;
  if (anchors) {
    depth_cfg = DepthColorConfig::from_mean(anchors->mu);
  } else if (cfg.depth) {
    depth_cfg = *cfg.depth;
  } else if (!samples.empty()) {
    depth_cfg = DepthColorConfig::from_mean(std::accumulate(samples.begin(), samples.end(), 0.0) /
                                            static_cast<double>(samples.size()));
  }
  depth_cfg.validate();

  ControlClip clip{std::vector<Frame>(static_cast<std::size_t>(frame_count)),
                   std::vector<Frame>(static_cast<std::size_t>(frame_count)), cfg.flow, depth_cfg, cfg.splat};
  parallel_for(static_cast<std::size_t>(frame_count), [&](std::size_t i) {
    const int t = static_cast<int>(i);
    clip.flow_frames[i] = flow_to_rgb(splat_flow_gaussian(set, t, cfg.splat), cfg.flow);
    const auto splat = splat_depth_disk(depth_set, anchors, t, cfg.splat);
    clip.depth_frames[i] = depth_to_rgb(splat.depth, splat.valid, depth_cfg);
  });
  return clip;
}

}  // namespace multicoin
