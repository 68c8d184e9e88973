#pragma once

// Corner detection and patch matching between two frames.
//
// Harris response on BT.601 luma, non-maximum suppression, then mutual-best
// matching by zero-mean normalized cross-correlation of 11x11 patches.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <vector>

#include "multicoin/raster.hpp"

namespace multicoin {

struct MatchPair {
  Point2 first;
  Point2 last;
  double score = 0.0;
};

/// Anything that yields point correspondences between two equally sized frames.
template <typename M>
concept FeatureMatcher = requires(const M& m, const Frame& a, const Frame& b) {
  { m.match(a, b) } -> std::convertible_to<std::vector<MatchPair>>;
};

inline Raster<double> luma(const Frame& frame) {
  Raster<double> out(frame.width(), frame.height());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const Rgb px = frame.pixels()[i];
    out.pixels()[i] = 0.299 * px.r + 0.587 * px.g + 0.114 * px.b;
  }
  return out;
}

struct HarrisConfig {
  double k = 0.04;
  double quality = 0.01;           // fraction of the strongest response
  double min_response = 1e-3;      // absolute floor; flat images yield nothing
  int nms_radius = 2;
  std::size_t max_corners = 400;
};

struct Corner {
  int x = 0;
  int y = 0;
  double response = 0.0;
};

namespace detail {

inline double clamped(const Raster<double>& img, int x, int y) {
  return img.at(std::clamp(x, 0, img.width() - 1), std::clamp(y, 0, img.height() - 1));
}

/// 5-tap binomial blur, separable, clamped borders.
inline Raster<double> binomial5(const Raster<double>& in) {
  static constexpr double kTaps[5] = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};
  Raster<double> tmp(in.width(), in.height()), out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) acc += kTaps[i + 2] * clamped(in, x + i, y);
      tmp.at(x, y) = acc;
    }
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) acc += kTaps[i + 2] * clamped(tmp, x, y + i);
      out.at(x, y) = acc;
    }
  return out;
}

}  // namespace detail

/// Corners whose centers are at least `margin` pixels from every border,
/// strongest first (ties in row-major order).
inline std::vector<Corner> harris_corners(const Frame& frame, int margin, const HarrisConfig& cfg = {}) {
  const auto img = luma(frame);
  const int w = img.width(), h = img.height();
  Raster<double> ixx(w, h), iyy(w, h), ixy(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto p = [&](int dx, int dy) { return detail::clamped(img, x + dx, y + dy); };
      const double gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      const double gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
      ixx.at(x, y) = gx * gx;
      iyy.at(x, y) = gy * gy;
      ixy.at(x, y) = gx * gy;
    }
  }
  const auto sxx = detail::binomial5(ixx), syy = detail::binomial5(iyy), sxy = detail::binomial5(ixy);
  Raster<double> response(w, h);
  double strongest = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double a = sxx.at(x, y), b = syy.at(x, y), c = sxy.at(x, y);
      const double r = a * b - c * c - cfg.k * (a + b) * (a + b);
      response.at(x, y) = r;
      if (x >= margin && y >= margin && x < w - margin && y < h - margin) strongest = std::max(strongest, r);
    }

  std::vector<Corner> corners;
  const double floor = std::max(cfg.min_response, cfg.quality * strongest);
  for (int y = margin; y < h - margin; ++y) {
    for (int x = margin; x < w - margin; ++x) {
      const double r = response.at(x, y);
      if (r <= floor) continue;
      bool is_max = true;
      for (int dy = -cfg.nms_radius; dy <= cfg.nms_radius && is_max; ++dy) {
        for (int dx = -cfg.nms_radius; dx <= cfg.nms_radius; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int qx = x + dx, qy = y + dy;
          if (!response.contains(qx, qy)) continue;
          const double q = response.at(qx, qy);
          // Plateaus keep their first pixel in row-major order.
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (q > r || (earlier && q == r)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) corners.push_back({x, y, r});
    }
  }
  std::stable_sort(corners.begin(), corners.end(),
                   [](const Corner& a, const Corner& b) { return a.response > b.response; });
  if (corners.size() > cfg.max_corners) corners.resize(cfg.max_corners);
  return corners;
}

/// Zero-mean patch, or empty when the patch has no variance.
inline std::vector<double> normalized_patch(const Raster<double>& img, int cx, int cy, int radius) {
  std::vector<double> patch;
  patch.reserve(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1)));
  double mean = 0.0;
  for (int y = cy - radius; y <= cy + radius; ++y)
    for (int x = cx - radius; x <= cx + radius; ++x) {
      patch.push_back(img.at(x, y));
      mean += img.at(x, y);
    }
  mean /= static_cast<double>(patch.size());
  double energy = 0.0;
  for (auto& v : patch) {
    v -= mean;
    energy += v * v;
  }
  if (energy <= 1e-12) return {};
  const double inv = 1.0 / std::sqrt(energy);
  for (auto& v : patch) v *= inv;
  return patch;
}

inline double ncc(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

struct HarrisNccMatcher {
  HarrisConfig harris;
  int patch_radius = 5;  // 11x11
  double threshold = 0.8;

  std::vector<MatchPair> match(const Frame& first, const Frame& last) const {
    require_same_shape(first, last, "feature matching");
    const int margin = patch_radius + 1;
    if (first.width() <= 2 * margin || first.height() <= 2 * margin) return {};

    struct Described {
      Corner corner;
      std::vector<double> patch;
    };
    auto describe = [&](const Frame& frame) {
      const auto img = luma(frame);
      std::vector<Described> out;
      for (const auto& c : harris_corners(frame, margin, harris)) {
        auto patch = normalized_patch(img, c.x, c.y, patch_radius);
        if (!patch.empty()) out.push_back({c, std::move(patch)});
      }
      return out;
    };
    const auto a = describe(first);
    const auto b = describe(last);
    if (a.empty() || b.empty()) return {};

    std::vector<double> scores(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) scores[i * b.size() + j] = ncc(a[i].patch, b[j].patch);

    // Strict improvement keeps the lowest index on ties.
    auto best_in_row = [&](std::size_t i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < b.size(); ++j)
        if (scores[i * b.size() + j] > scores[i * b.size() + best]) best = j;
      return best;
    };
    auto best_in_col = [&](std::size_t j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < a.size(); ++i)
        if (scores[i * b.size() + j] > scores[best * b.size() + j]) best = i;
      return best;
    };

    std::vector<MatchPair> pairs;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t j = best_in_row(i);
      const double s = scores[i * b.size() + j];
      if (s < threshold || best_in_col(j) != i) continue;
      pairs.push_back({{double(a[i].corner.x), double(a[i].corner.y)},
                       {double(b[j].corner.x), double(b[j].corner.y)},
                       s});
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const MatchPair& p, const MatchPair& q) {
      if (p.score != q.score) return p.score > q.score;
      if (p.first.y != q.first.y) return p.first.y < q.first.y;
      return p.first.x < q.first.x;
    });
    return pairs;
  }
};

static_assert(FeatureMatcher<HarrisNccMatcher>);

}  // namespace multicoin
