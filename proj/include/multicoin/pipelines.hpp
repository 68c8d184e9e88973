#pragma once

// End-to-end operations shared by the CLI and the HTTP service. Both front
// ends call these and only differ in where the bytes go, which is what keeps
// their artifacts identical.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "multicoin/controls.hpp"
#include "multicoin/json_io.hpp"
#include "multicoin/latent_pack.hpp"
#include "multicoin/manifest.hpp"
#include "multicoin/media_io.hpp"
#include "multicoin/metrics.hpp"
#include "multicoin/regions.hpp"
#include "multicoin/trajectory.hpp"

namespace multicoin::pipelines {

// ---------------------------------------------------------------------------
// Control rendering.

struct RenderOptions {
  ControlConfig controls;
  bool anchors = false;
  std::optional<int> frames;  // defaults to the manifest's frame count
};

/// Reads {"sigma","truncate","disk_radius","mag_max","d_ref","d_scale",
/// "anchors","frames"}; every field optional.
inline RenderOptions render_options_from_json(const Json& j, const std::string& path = "") {
  RenderOptions o;
  if (j.is_null()) return o;
  require_object(j, path);
  o.controls.splat.sigma = field_or<double>(j, "sigma", path, o.controls.splat.sigma);
  o.controls.splat.truncate = field_or<double>(j, "truncate", path, o.controls.splat.truncate);
  o.controls.splat.disk_radius = field_or<double>(j, "disk_radius", path, o.controls.splat.disk_radius);
  o.controls.flow.mag_max = field_or<double>(j, "mag_max", path, o.controls.flow.mag_max);
  const bool has_ref = j.contains("d_ref") && !j["d_ref"].is_null();
  const bool has_scale = j.contains("d_scale") && !j["d_scale"].is_null();
  if (has_ref != has_scale) schema_error(path, "d_ref and d_scale must be given together");
  if (has_ref) o.controls.depth = DepthColorConfig{field<double>(j, "d_ref", path), field<double>(j, "d_scale", path)};
  o.anchors = field_or<bool>(j, "anchors", path, false);
  if (j.contains("frames") && !j["frames"].is_null()) o.frames = field<int>(j, "frames", path);
  return o;
}

struct RenderedControls {
  std::vector<Bytes> flow_png;
  std::vector<Bytes> depth_png;
  Json sidecar;
};

inline std::optional<AnchorSet> anchors_for(const TrajectorySet& set, const RenderOptions& options) {
  if (!options.anchors) return std::nullopt;
  std::vector<double> samples;
  for (const auto& traj : set.trajectories)
    for (const auto& p : traj.points)
      if (p.depth) samples.push_back(*p.depth);
  return depth_anchors(samples, set.width, set.height, options.controls.splat.disk_radius);
}

/// Manifests may hold only sparse control points; they are densified per frame
/// before rasterization.
inline RenderedControls render_controls(const TrajectorySet& manifest, const RenderOptions& options) {
  manifest.validate();
  const auto dense = densify(manifest);
  const auto anchors = anchors_for(dense, options);
  const int frames = options.frames.value_or(manifest.frame_count);
  const auto clip = render_control_clip(dense, anchors ? &*anchors : nullptr, frames, options.controls);

  RenderedControls out;
  out.flow_png.resize(clip.flow_frames.size());
  out.depth_png.resize(clip.depth_frames.size());
  parallel_for(clip.flow_frames.size(), [&](std::size_t i) {
    out.flow_png[i] = encode_png(clip.flow_frames[i]);
    out.depth_png[i] = encode_png(clip.depth_frames[i]);
  });
  Json anchor_list = Json::array();
  if (anchors)
    for (const auto& a : anchors->anchors) anchor_list.push_back({{"x", a.position.x}, {"y", a.position.y}, {"depth", a.depth}});
  out.sidecar = {{"width", manifest.width},
                 {"height", manifest.height},
                 {"frames", frames},
                 {"mag_max", clip.flow_cfg.mag_max},
                 {"d_ref", clip.depth_cfg.d_ref},
                 {"d_scale", clip.depth_cfg.d_scale},
                 {"sigma", clip.splat_cfg.sigma},
                 {"truncate", clip.splat_cfg.truncate},
                 {"disk_radius", clip.splat_cfg.disk_radius},
                 {"anchors", std::move(anchor_list)}};
  return out;
}

// ---------------------------------------------------------------------------
// Regions.

inline PixelPos pixel_of(Point2 p) {
  return {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
}

inline Bytes segment_mask_png(const FlowField& flow, Point2 anchor, double threshold_frac) {
  return encode_mask_png(segment_region(flow, pixel_of(anchor), threshold_frac));
}

struct AugmentInput {
  std::vector<KeyframeSlot> keyframes;
  TrajectorySet trajectories;
  std::optional<int> trajectory_id;  // defaults to the first trajectory
  std::optional<Mask> mask;          // explicit region footprint, or
  std::optional<FlowField> flow;     // flow to segment at the anchor
  std::optional<Point2> anchor;      // defaults to the trajectory at source
  double threshold_frac = 0.5;
  int source_frame = 0;
  std::optional<int> length;  // defaults to the trajectory set's frames
  std::optional<std::vector<int>> targets;
  int num_targets = 2;
  double dropout_p = 0.0;
  std::uint64_t seed = 0;
};

struct AugmentedArtifacts {
  std::vector<Bytes> frame_png;
  std::vector<Bytes> mask_png;
  Json slots;
};

inline AugmentedArtifacts augment(const AugmentInput& in) {
  in.trajectories.validate();
  require(!in.trajectories.trajectories.empty(), ErrorCode::EmptyInput, "augment needs a trajectory");
  const Trajectory* traj = &in.trajectories.trajectories.front();
  if (in.trajectory_id) {
    auto it = std::find_if(in.trajectories.trajectories.begin(), in.trajectories.trajectories.end(),
                           [&](const Trajectory& t) { return t.id == *in.trajectory_id; });
    if (it == in.trajectories.trajectories.end())
      fail(ErrorCode::BadParams, "no trajectory with id " + std::to_string(*in.trajectory_id));
    traj = &*it;
  }
  const auto* origin = traj->at(in.source_frame);
  if (!origin) fail(ErrorCode::TimeOutOfRange, "trajectory has no point at the source frame");
  const Point2 anchor = in.anchor.value_or(origin->position());

  auto source = std::find_if(in.keyframes.begin(), in.keyframes.end(),
                             [&](const KeyframeSlot& k) { return k.index == in.source_frame; });
  if (source == in.keyframes.end())
    fail(ErrorCode::MissingEndpoints, "no keyframe at source frame " + std::to_string(in.source_frame));

  Mask footprint;
  if (in.mask) {
    footprint = *in.mask;
  } else if (in.flow) {
    footprint = segment_region(*in.flow, pixel_of(anchor), in.threshold_frac);
  } else {
    fail(ErrorCode::BadParams, "augment needs a region mask or a flow field to segment");
  }

  const int length = in.length.value_or(in.trajectories.frame_count);
  std::vector<int> slots;
  if (in.targets) {
    slots = *in.targets;
  } else {
    int next_key = length - 1;
    for (const auto& k : in.keyframes)
      if (k.index > in.source_frame) next_key = std::min(next_key, k.index);
    slots = default_target_slots(in.source_frame, next_key, in.num_targets);
  }

  const RegionSpec region{std::move(footprint), in.source_frame, anchor};
  const auto regions = translate_region(source->frame, region, *traj, slots);
  std::vector<TargetSlot> targets;
  for (std::size_t i = 0; i < slots.size(); ++i) targets.push_back({slots[i], regions[i].frame, regions[i].mask});

  auto dropped = condition_dropout(compose_augmented_clip(in.keyframes, targets, length), in.dropout_p, in.seed);
  const auto& clip = dropped.clip;
  AugmentedArtifacts out;
  out.frame_png.resize(clip.frames.size());
  out.mask_png.resize(clip.masks.size());
  parallel_for(clip.frames.size(), [&](std::size_t i) {
    out.frame_png[i] = encode_png(clip.frames[i]);
    out.mask_png[i] = encode_mask_png(clip.masks[i]);
  });
  out.slots = {{"length", length},
               {"keyframes", clip.keyframe_positions},
               {"targets", clip.target_positions},
               {"content_dropped", dropped.dropped}};
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation.

inline Json evaluate_motion(const TrajectorySet& manifest, std::span<const FlowField> generated) {
  return metric_report_json(motion_metric(manifest, generated), std::nullopt);
}

inline Json evaluate_ssim(std::span<const Frame> a, std::span<const Frame> b) {
  require(a.size() == b.size(), ErrorCode::LengthMismatch, "frame sequences differ in length");
  require(!a.empty(), ErrorCode::EmptyInput, "no frames to compare");
  std::vector<double> values(a.size());
  parallel_for(a.size(), [&](std::size_t i) { values[i] = ssim(a[i], b[i]); });
  return metric_report_json(std::nullopt, values);
}

}  // namespace multicoin::pipelines
