#pragma once

// Motion adherence and frame quality: discrete Frechet distance, the motion
// metric (re-track the input seeds through generated flow and compare paths),
// and grayscale SSIM.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "multicoin/error.hpp"
#include "multicoin/features.hpp"
#include "multicoin/json_io.hpp"
#include "multicoin/raster.hpp"
#include "multicoin/trajectory.hpp"

namespace multicoin {

using Polyline = std::vector<Point2>;

/// Discrete Frechet distance with Euclidean ground distance, O(|P||Q|) time
/// and O(|Q|) memory.
inline double frechet_distance(std::span<const Point2> p, std::span<const Point2> q) {
  require(!p.empty() && !q.empty(), ErrorCode::EmptyPolyline, "Frechet distance of an empty polyline");
  for (auto s : {p, q})
    for (const auto& pt : s)
      require(std::isfinite(pt.x) && std::isfinite(pt.y), ErrorCode::NonFiniteValue, "polyline point is not finite");

  std::vector<double> prev(q.size()), cur(q.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      const double d = distance(p[i], q[j]);
      if (i == 0 && j == 0)
        cur[j] = d;
      else if (i == 0)
        cur[j] = std::max(d, cur[j - 1]);
      else if (j == 0)
        cur[j] = std::max(d, prev[j]);
      else
        cur[j] = std::max(d, std::min({prev[j], prev[j - 1], cur[j - 1]}));
    }
    std::swap(prev, cur);
  }
  return prev.back();
}

inline Polyline polyline_of(const Trajectory& traj) {
  Polyline out;
  out.reserve(traj.points.size());
  for (const auto& p : traj.points) out.push_back(p.position());
  return out;
}

struct TrajectoryScore {
  int id = 0;
  double frechet = 0.0;
};

struct MotionReport {
  std::vector<TrajectoryScore> per_trajectory;
  double mean_frechet = 0.0;
};

/// Each input trajectory is re-tracked from its first point through the
/// generated flows over the same time span, then scored against itself.
inline MotionReport motion_metric(const TrajectorySet& input, std::span<const FlowField> generated) {
  require(!input.trajectories.empty(), ErrorCode::EmptyInput, "motion metric needs at least one trajectory");
  require(static_cast<int>(generated.size()) == input.frame_count - 1, ErrorCode::DimensionMismatch,
          "expected " + std::to_string(input.frame_count - 1) + " generated flow fields, got " +
              std::to_string(generated.size()));
  for (const auto& f : generated)
    require(f.width() == input.width && f.height() == input.height, ErrorCode::DimensionMismatch,
            "generated flow size differs from the trajectory bounds");

  MotionReport report;
  double total = 0.0;
  for (const auto& traj : input.trajectories) {
    require(!traj.points.empty(), ErrorCode::EmptyPolyline, "trajectory " + std::to_string(traj.id) + " is empty");
    const int t0 = traj.points.front().t, t1 = traj.points.back().t;
    Polyline retracked{traj.points.front().position()};
    if (t1 > t0) {
      const Point2 seed = retracked.front();
      const auto tracked = track_points(generated.subspan(static_cast<std::size_t>(t0), static_cast<std::size_t>(t1 - t0)),
                                        std::span(&seed, 1));
      retracked = polyline_of(tracked.trajectories.front());
    }
    const double score = frechet_distance(polyline_of(traj), retracked);
    report.per_trajectory.push_back({traj.id, score});
    total += score;
  }
  report.mean_frechet = total / static_cast<double>(report.per_trajectory.size());
  return report;
}

// ---------------------------------------------------------------------------

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) sum += w[static_cast<std::size_t>(i)] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
  for (auto& v : w) v /= sum;
  return w;
}

/// Mean SSIM of BT.601 luma over every window that fits entirely inside the
/// frame (no padding).
inline double ssim(const Frame& a, const Frame& b, const SsimConfig& cfg = {}) {
  require_same_shape(a, b, "ssim");
  require(a.width() >= cfg.window && a.height() >= cfg.window, ErrorCode::TooSmall,
          "ssim needs frames of at least " + std::to_string(cfg.window) + "x" + std::to_string(cfg.window));
  const auto x = luma(a), y = luma(b);
  const int w = a.width(), h = a.height(), n = cfg.window;
  const int ow = w - n + 1, oh = h - n + 1;
  const auto kernel = gaussian_window(n, cfg.sigma);

  // Horizontal then vertical pass over the five moment images.
  auto filter = [&](auto value) {
    Raster<double> tmp(ow, h), out(ow, oh);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < ow; ++c) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += kernel[static_cast<std::size_t>(k)] * value(c + k, r);
        tmp.at(c, r) = acc;
      }
    for (int r = 0; r < oh; ++r)
      for (int c = 0; c < ow; ++c) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += kernel[static_cast<std::size_t>(k)] * tmp.at(c, r + k);
        out.at(c, r) = acc;
      }
    return out;
  };
  const auto mx = filter([&](int c, int r) { return x.at(c, r); });
  const auto my = filter([&](int c, int r) { return y.at(c, r); });
  const auto mxx = filter([&](int c, int r) { return x.at(c, r) * x.at(c, r); });
  const auto myy = filter([&](int c, int r) { return y.at(c, r) * y.at(c, r); });
  const auto mxy = filter([&](int c, int r) { return x.at(c, r) * y.at(c, r); });

  const double c1 = (cfg.k1 * cfg.dynamic_range) * (cfg.k1 * cfg.dynamic_range);
  const double c2 = (cfg.k2 * cfg.dynamic_range) * (cfg.k2 * cfg.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double ux = mx.pixels()[i], uy = my.pixels()[i];
    const double vx = mxx.pixels()[i] - ux * ux, vy = myy.pixels()[i] - uy * uy;
    const double cov = mxy.pixels()[i] - ux * uy;
    total += ((2 * ux * uy + c1) * (2 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

// ---------------------------------------------------------------------------

/// {"per_trajectory":[{"id","frechet"}],"mean_frechet","ssim_per_frame":[...],
///  "ssim_mean"}; sections not evaluated are empty / null.
inline Json metric_report_json(const std::optional<MotionReport>& motion, const std::optional<std::vector<double>>& ssim_values) {
  Json report{{"per_trajectory", Json::array()}, {"mean_frechet", nullptr}, {"ssim_per_frame", Json::array()},
              {"ssim_mean", nullptr}};
  if (motion) {
    for (const auto& s : motion->per_trajectory) report["per_trajectory"].push_back({{"id", s.id}, {"frechet", s.frechet}});
    report["mean_frechet"] = motion->mean_frechet;
  }
  if (ssim_values && !ssim_values->empty()) {
    double sum = 0.0;
    for (double v : *ssim_values) {
      report["ssim_per_frame"].push_back(v);
      sum += v;
    }
    report["ssim_mean"] = sum / static_cast<double>(ssim_values->size());
  }
  return report;
}

}  // namespace multicoin
