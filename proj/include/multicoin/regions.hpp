#pragma once

// Augmented frames: a moving region found by flow segmentation, translated
// along a trajectory into target-region frames, and slotted with the
// keyframes into a clip with validity masks.

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "multicoin/error.hpp"
#include "multicoin/raster.hpp"
#include "multicoin/trajectory.hpp"

namespace multicoin {

struct PixelPos {
  int x = 0;
  int y = 0;

  friend bool operator==(const PixelPos&, const PixelPos&) = default;
};

struct RegionSpec {
  Mask mask;
  int source_frame = 0;
  Point2 anchor;
};

/// 8-connected component containing `anchor` of the pixels whose magnitude is
/// at least threshold_frac times the anchor's.
inline Mask segment_region(const FlowField& flow, PixelPos anchor, double threshold_frac = 0.5) {
  require(flow.contains(anchor.x, anchor.y), ErrorCode::OutOfBounds, "segmentation anchor is outside the flow");
  require(std::isfinite(threshold_frac) && threshold_frac >= 0.0, ErrorCode::BadParams,
          "threshold_frac must be >= 0");
  const double anchor_mag = magnitude(flow.at(anchor.x, anchor.y));
  if (anchor_mag == 0.0) fail(ErrorCode::StaticAnchor, "flow at the anchor is zero");
  const double cut = threshold_frac * anchor_mag;

  Mask mask(flow.width(), flow.height(), 0);
  std::deque<PixelPos> frontier{anchor};
  mask.at(anchor.x, anchor.y) = 1;
  while (!frontier.empty()) {
    const auto p = frontier.front();
    frontier.pop_front();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int qx = p.x + dx, qy = p.y + dy;
        if (!flow.contains(qx, qy) || mask.at(qx, qy)) continue;
        if (magnitude(flow.at(qx, qy)) < cut) continue;
        mask.at(qx, qy) = 1;
        frontier.push_back({qx, qy});
      }
    }
  }
  return mask;
}

struct TargetRegion {
  Frame frame;
  Mask mask;
};

/// Rigid integer shift of the region by round(traj(t) - traj(source_frame)).
/// Pixels leaving the frame are dropped.
inline std::vector<TargetRegion> translate_region(const Frame& keyframe, const RegionSpec& region,
                                                  const Trajectory& traj, std::span<const int> sample_ts) {
  require_same_shape(keyframe, region.mask, "region mask vs keyframe");
  const auto* origin = traj.at(region.source_frame);
  if (!origin)
    fail(ErrorCode::TimeOutOfRange, "trajectory has no point at the source frame " +
                                        std::to_string(region.source_frame));
  require(distance(origin->position(), region.anchor) <= 1.0, ErrorCode::AnchorMismatch,
          "region anchor is more than 1 px from the trajectory at the source frame");

  std::vector<TargetRegion> out;
  for (int t : sample_ts) {
    const auto* p = traj.at(t);
    if (!p) fail(ErrorCode::TimeOutOfRange, "trajectory has no point at t=" + std::to_string(t));
    const int dx = static_cast<int>(std::lround(p->x - origin->x));
    const int dy = static_cast<int>(std::lround(p->y - origin->y));
    TargetRegion target{Frame(keyframe.width(), keyframe.height()), Mask(keyframe.width(), keyframe.height(), 0)};
    for (int y = 0; y < keyframe.height(); ++y) {
      for (int x = 0; x < keyframe.width(); ++x) {
        if (!region.mask.at(x, y) || !keyframe.contains(x + dx, y + dy)) continue;
        target.frame.at(x + dx, y + dy) = keyframe.at(x, y);
        target.mask.at(x + dx, y + dy) = 1;
      }
    }
    out.push_back(std::move(target));
  }
  return out;
}

/// Evenly spaced slots strictly between two keyframes.
inline std::vector<int> default_target_slots(int first_key, int last_key, int count = 2) {
  std::vector<int> slots;
  for (int i = 1; i <= count; ++i) {
    const int t = first_key + static_cast<int>(std::lround(double(i) * (last_key - first_key) / (count + 1)));
    if (t > first_key && t < last_key && (slots.empty() || slots.back() != t)) slots.push_back(t);
  }
  return slots;
}

struct AugmentedClip {
  std::vector<Frame> frames;
  std::vector<Mask> masks;
  std::vector<int> keyframe_positions;
  std::vector<int> target_positions;
};

struct KeyframeSlot {
  int index = 0;
  Frame frame;
};

struct TargetSlot {
  int index = 0;
  Frame frame;
  Mask mask;
};

inline AugmentedClip compose_augmented_clip(std::span<const KeyframeSlot> keyframes,
                                            std::span<const TargetSlot> targets, int length) {
  require(length >= 2, ErrorCode::BadParams, "augmented clip needs length >= 2");
  require(!keyframes.empty(), ErrorCode::MissingEndpoints, "no keyframes given");
  const Frame& reference = keyframes.front().frame;

  std::set<int> used;
  auto claim = [&](int index, const char* what) {
    require(index >= 0 && index < length, ErrorCode::OutOfBounds,
            std::string(what) + " index " + std::to_string(index) + " outside [0, " + std::to_string(length) + ")");
    require(used.insert(index).second, ErrorCode::SlotCollision,
            std::string(what) + " index " + std::to_string(index) + " is already occupied");
  };

  AugmentedClip clip;
  clip.frames.assign(static_cast<std::size_t>(length), Frame(reference.width(), reference.height()));
  clip.masks.assign(static_cast<std::size_t>(length), Mask(reference.width(), reference.height(), 0));
  for (const auto& k : keyframes) {
    claim(k.index, "keyframe");
    require_same_shape(reference, k.frame, "keyframe size");
    clip.frames[static_cast<std::size_t>(k.index)] = k.frame;
    clip.masks[static_cast<std::size_t>(k.index)] = Mask(reference.width(), reference.height(), 1);
    clip.keyframe_positions.push_back(k.index);
  }
  require(used.contains(0) && used.contains(length - 1), ErrorCode::MissingEndpoints,
          "keyframes must occupy the first and last slot");
  for (const auto& target : targets) {
    claim(target.index, "target");
    require_same_shape(reference, target.frame, "target frame size");
    require_same_shape(reference, target.mask, "target mask size");
    Frame frame(reference.width(), reference.height());
    for (std::size_t i = 0; i < frame.size(); ++i)
      if (target.mask.pixels()[i]) frame.pixels()[i] = target.frame.pixels()[i];
    clip.frames[static_cast<std::size_t>(target.index)] = std::move(frame);
    clip.masks[static_cast<std::size_t>(target.index)] = target.mask;
    clip.target_positions.push_back(target.index);
  }
  std::sort(clip.keyframe_positions.begin(), clip.keyframe_positions.end());
  std::sort(clip.target_positions.begin(), clip.target_positions.end());
  return clip;
}

}  // namespace multicoin
