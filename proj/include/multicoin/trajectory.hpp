#pragma once

// Sparse trajectories: seed selection, advection through dense flow, depth
// sampling along paths, endpoint-matched linear trajectories, and keyframe
// sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "multicoin/error.hpp"
#include "multicoin/features.hpp"
#include "multicoin/media_io.hpp"
#include "multicoin/raster.hpp"
#include "multicoin/rng.hpp"

namespace multicoin {

struct TrackPoint {
  int t = 0;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> depth;
  std::optional<FlowSample> flow;

  Point2 position() const { return {x, y}; }
  friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

struct Trajectory {
  int id = 0;
  std::vector<TrackPoint> points;

  /// Point recorded at frame t, or nullptr.
  const TrackPoint* at(int t) const {
    auto it = std::lower_bound(points.begin(), points.end(), t,
                               [](const TrackPoint& p, int value) { return p.t < value; });
    return it != points.end() && it->t == t ? &*it : nullptr;
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct TrajectorySet {
  int width = 0;
  int height = 0;
  int frame_count = 0;
  std::vector<Trajectory> trajectories;

  void validate() const {
    require(width >= 1 && height >= 1, ErrorCode::BadParams, "trajectory set needs positive bounds");
    require(frame_count >= 1, ErrorCode::BadParams, "trajectory set needs frame_count >= 1");
    std::set<int> ids;
    for (const auto& traj : trajectories) {
      require(ids.insert(traj.id).second, ErrorCode::BadParams,
              "duplicate trajectory id " + std::to_string(traj.id));
      for (std::size_t i = 0; i < traj.points.size(); ++i) {
        const auto& p = traj.points[i];
        require(p.t >= 0 && p.t < frame_count, ErrorCode::TimeOutOfRange,
                "trajectory " + std::to_string(traj.id) + " has t=" + std::to_string(p.t));
        require(i == 0 || traj.points[i - 1].t < p.t, ErrorCode::BadParams,
                "trajectory " + std::to_string(traj.id) + " times are not strictly increasing");
        require(std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0 && p.y >= 0 && p.x <= width - 1 &&
                    p.y <= height - 1,
                ErrorCode::OutOfBounds, "trajectory " + std::to_string(traj.id) + " leaves the frame");
      }
    }
  }

  friend bool operator==(const TrajectorySet&, const TrajectorySet&) = default;
};

// ---------------------------------------------------------------------------

/// Greedy pick of up to k pixels in descending flow magnitude. A candidate
/// closer than `min_sep` to an already chosen seed is skipped; equal
/// magnitudes resolve in row-major order; static pixels are never chosen.
inline std::vector<Point2> select_seeds(const FlowField& flow, int k = 8, double min_sep = 16.0) {
  require(k >= 1, ErrorCode::BadParams, "k must be >= 1");
  require(min_sep >= 0.0, ErrorCode::BadParams, "min_sep must be >= 0");

  struct Candidate {
    double mag2;
    int index;
  };
  std::vector<Candidate> candidates;
  for (int i = 0; i < static_cast<int>(flow.size()); ++i) {
    const auto f = flow.pixels()[static_cast<std::size_t>(i)];
    const double mag2 = double(f.u) * f.u + double(f.v) * f.v;
    if (mag2 > 0.0) candidates.push_back({mag2, i});
  }
  if (candidates.empty()) fail(ErrorCode::NoMotion, "flow field has no motion");
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.mag2 > b.mag2; });

  const double sep2 = min_sep * min_sep;
  std::vector<Point2> seeds;
  for (const auto& c : candidates) {
    const Point2 p{double(c.index % flow.width()), double(c.index / flow.width())};
    const bool crowded = std::any_of(seeds.begin(), seeds.end(), [&](Point2 s) {
      const double dx = s.x - p.x, dy = s.y - p.y;
      return dx * dx + dy * dy < sep2;
    });
    if (crowded) continue;
    seeds.push_back(p);
    if (static_cast<int>(seeds.size()) == k) break;
  }
  return seeds;
}

/// Forward Euler advection with bilinear sampling and border clamping.
///
/// Point t carries the flow sampled at its position in flows[t]; the final
/// point carries the last field's sample at its own position, so every point
/// is renderable.
inline TrajectorySet track_points(std::span<const FlowField> flows, std::span<const Point2> seeds) {
  require(!flows.empty(), ErrorCode::EmptyInput, "tracking needs at least one flow field");
  for (const auto& f : flows) require_same_shape(flows.front(), f, "flow sequence");
  const auto& first = flows.front();

  TrajectorySet set{first.width(), first.height(), static_cast<int>(flows.size()) + 1, {}};
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    Point2 p = seeds[s];
    require(std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0 && p.y >= 0 && p.x <= first.width() - 1 &&
                p.y <= first.height() - 1,
            ErrorCode::OutOfBounds, "seed " + std::to_string(s) + " is outside the frame");
    Trajectory traj{static_cast<int>(s), {}};
    traj.points.reserve(flows.size() + 1);
    for (std::size_t t = 0; t <= flows.size(); ++t) {
      const auto& field = flows[std::min(t, flows.size() - 1)];
      const FlowSample f = bilinear_sample(field, p.x, p.y);
      traj.points.push_back({static_cast<int>(t), p.x, p.y, std::nullopt, f});
      if (t < flows.size()) p = clamp_to(field, {p.x + f.u, p.y + f.v});
    }
    set.trajectories.push_back(std::move(traj));
  }
  return set;
}

inline TrajectorySet attach_depth(TrajectorySet set, std::span<const DepthMap> depths) {
  require(static_cast<int>(depths.size()) == set.frame_count, ErrorCode::LengthMismatch,
          "need one depth map per frame: " + std::to_string(set.frame_count) + " frames, " +
              std::to_string(depths.size()) + " maps");
  for (const auto& d : depths) {
    require(d.width() == set.width && d.height() == set.height, ErrorCode::DimensionMismatch,
            "depth map size differs from trajectory bounds");
  }
  for (auto& traj : set.trajectories)
    for (auto& p : traj.points) p.depth = bilinear_sample(depths[static_cast<std::size_t>(p.t)], p.x, p.y);
  return set;
}

// ---------------------------------------------------------------------------

struct AutoTrajectoryConfig {
  int frame_count = 2;
  int max_pairs = 8;
  double threshold = 0.8;
};

/// Linear trajectories between matched points of the first and last frame.
template <FeatureMatcher Matcher = HarrisNccMatcher>
TrajectorySet auto_trajectory(const Frame& first, const Frame& last, const AutoTrajectoryConfig& cfg,
                              Matcher matcher = {}) {
  require(cfg.frame_count >= 2, ErrorCode::BadParams, "auto trajectories need frame_count >= 2");
  require(cfg.max_pairs >= 1, ErrorCode::BadParams, "max_pairs must be >= 1");
  require_same_shape(first, last, "auto_trajectory frames");
  if constexpr (requires { matcher.threshold; }) matcher.threshold = cfg.threshold;

  auto pairs = matcher.match(first, last);
  std::erase_if(pairs, [&](const MatchPair& p) { return p.score < cfg.threshold; });
  if (pairs.empty()) fail(ErrorCode::NoMatches, "no feature pair passes the correspondence threshold");
  if (pairs.size() > static_cast<std::size_t>(cfg.max_pairs)) pairs.resize(static_cast<std::size_t>(cfg.max_pairs));

  TrajectorySet set{first.width(), first.height(), cfg.frame_count, {}};
  const int steps = cfg.frame_count - 1;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [a, b, score] = pairs[i];
    Trajectory traj{static_cast<int>(i), {}};
    for (int t = 0; t < cfg.frame_count; ++t) {
      const double alpha = static_cast<double>(t) / steps;
      traj.points.push_back({t, a.x + alpha * (b.x - a.x), a.y + alpha * (b.y - a.y), std::nullopt, std::nullopt});
    }
    set.trajectories.push_back(std::move(traj));
  }
  return set;
}

// ---------------------------------------------------------------------------

struct KeyframePlan {
  int frame_count = 0;
  std::vector<int> positions;

  friend bool operator==(const KeyframePlan&, const KeyframePlan&) = default;
};

inline constexpr int kMaxInteriorKeyframes = 5;

/// First and last frame always, plus 0..5 distinct interior frames.
inline KeyframePlan sample_keyframes(int frame_count, std::uint64_t seed) {
  require(frame_count >= 2, ErrorCode::BadParams, "keyframe sampling needs at least 2 frames");
  Rng rng(seed);
  const int interior = frame_count - 2;
  const int k = std::min(static_cast<int>(rng.uniform_int(0, kMaxInteriorKeyframes)), interior);

  std::vector<int> pool(static_cast<std::size_t>(interior));
  std::iota(pool.begin(), pool.end(), 1);
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, interior - 1));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  KeyframePlan plan{frame_count, {0}};
  plan.positions.insert(plan.positions.end(), pool.begin(), pool.begin() + k);
  plan.positions.push_back(frame_count - 1);
  std::sort(plan.positions.begin(), plan.positions.end());
  return plan;
}

// ---------------------------------------------------------------------------

/// Fills every frame between a trajectory's first and last point by linear
/// interpolation of position (and depth when both ends carry one). Missing
/// flow samples become forward differences of the path; the last point
/// repeats the final difference. Trajectories with a single point get zero
/// flow.
inline Trajectory densify(const Trajectory& traj) {
  Trajectory out{traj.id, {}};
  if (traj.points.empty()) return out;
  for (std::size_t i = 0; i + 1 < traj.points.size(); ++i) {
    const auto& a = traj.points[i];
    const auto& b = traj.points[i + 1];
    const int span = b.t - a.t;
    for (int t = a.t; t < b.t; ++t) {
      if (t == a.t) {
        out.points.push_back(a);
        continue;
      }
      const double alpha = static_cast<double>(t - a.t) / span;
      TrackPoint p{t, a.x + alpha * (b.x - a.x), a.y + alpha * (b.y - a.y), std::nullopt, std::nullopt};
      if (a.depth && b.depth) p.depth = *a.depth + alpha * (*b.depth - *a.depth);
      out.points.push_back(p);
    }
  }
  out.points.push_back(traj.points.back());

  for (std::size_t i = 0; i < out.points.size(); ++i) {
    auto& p = out.points[i];
    if (p.flow) continue;
    if (out.points.size() == 1) {
      p.flow = FlowSample{};
    } else {
      const std::size_t j = std::min(i, out.points.size() - 2);
      p.flow = FlowSample{out.points[j + 1].x - out.points[j].x, out.points[j + 1].y - out.points[j].y};
    }
  }
  return out;
}

inline TrajectorySet densify(TrajectorySet set) {
  for (auto& traj : set.trajectories) traj = densify(traj);
  return set;
}

}  // namespace multicoin
