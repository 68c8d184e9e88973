#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "multicoin/error.hpp"

namespace multicoin {

struct FlowVector {
  float u = 0.0f;
  float v = 0.0f;

  friend bool operator==(const FlowVector&, const FlowVector&) = default;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Dense row-major raster; (x, y) with x rightward and y downward.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, const T& fill = T{}) : width_(width), height_(height) {
    require(width >= 1 && height >= 1, ErrorCode::BadParams,
            "raster dimensions must be positive, got " + std::to_string(width) + "x" +
                std::to_string(height));
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    require(width >= 1 && height >= 1, ErrorCode::BadParams, "raster dimensions must be positive");
    require(data_.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
            ErrorCode::LengthMismatch, "raster payload does not match width*height");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& at(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& at(int x, int y) const noexcept { return data_[index(x, y)]; }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Per-pixel (u, v) displacement in pixels per frame step.
using FlowField = Raster<FlowVector>;
/// Relative depth; larger is farther. Only ratios and differences carry meaning.
using DepthMap = Raster<float>;
/// 8-bit RGB image.
using Frame = Raster<Rgb>;
/// Validity bits, 1 = valid. Stored as bytes to keep spans contiguous.
using Mask = Raster<std::uint8_t>;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

inline double magnitude(FlowVector f) noexcept {
  return std::hypot(static_cast<double>(f.u), static_cast<double>(f.v));
}

inline std::size_t count_set(const Mask& mask) noexcept {
  std::size_t n = 0;
  for (auto bit : mask.pixels()) n += bit != 0;
  return n;
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const std::string& what) {
  require(a.width() == b.width() && a.height() == b.height(), ErrorCode::DimensionMismatch,
          what + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
              std::to_string(b.width()) + "x" + std::to_string(b.height()));
}

}  // namespace multicoin
