#pragma once

// Bit-exact codecs for flow (.flo), depth (PFM), frames (PNG / PPM) and masks
// (8-bit grayscale PNG), plus bilinear sampling of dense fields.

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "multicoin/error.hpp"
#include "multicoin/raster.hpp"

namespace multicoin {

using Bytes = std::vector<std::uint8_t>;

namespace detail {

inline void put_u32le(Bytes& out, std::uint32_t value) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline std::uint32_t get_u32be(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[3]) | static_cast<std::uint32_t>(p[2]) << 8 |
         static_cast<std::uint32_t>(p[1]) << 16 | static_cast<std::uint32_t>(p[0]) << 24;
}

inline void put_f32le(Bytes& out, float value) { put_u32le(out, std::bit_cast<std::uint32_t>(value)); }

inline float get_f32(const std::uint8_t* p, bool little_endian) {
  return std::bit_cast<float>(little_endian ? get_u32le(p) : get_u32be(p));
}

inline bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

/// Cursor over a netpbm-style ASCII header.
class HeaderReader {
 public:
  HeaderReader(std::span<const std::uint8_t> bytes, ErrorCode code) : bytes_(bytes), code_(code) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view token() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) ++pos_;
    if (start == pos_) fail(code_, "header ended early");
    return {reinterpret_cast<const char*>(bytes_.data()) + start, pos_ - start};
  }

  long long integer() {
    const auto text = token();
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
      fail(code_, "expected integer, got '" + std::string(text) + "'");
    return value;
  }

  double real() {
    const auto text = token();
    // from_chars for floating point is not available in every libstdc++ we target.
    std::string copy(text);
    char* end = nullptr;
    const double value = std::strtod(copy.c_str(), &end);
    if (end != copy.c_str() + copy.size()) fail(code_, "expected number, got '" + copy + "'");
    return value;
  }

  /// Exactly one whitespace byte separates the header from the payload.
  void single_space() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) fail(code_, "missing header terminator");
    ++pos_;
  }

  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  ErrorCode code_;
  std::size_t pos_ = 0;
};

inline void check_payload(std::size_t available, std::uint64_t expected, std::string_view what) {
  if (available < expected)
    fail(ErrorCode::TruncatedPayload, std::string(what) + ": expected " + std::to_string(expected) +
                                          " payload bytes, found " + std::to_string(available));
  if (available > expected)
    fail(ErrorCode::TrailingData, std::string(what) + ": " + std::to_string(available - expected) +
                                      " bytes after payload");
}

constexpr std::uint64_t kMaxPixels = 1ull << 28;

}  // namespace detail

// ---------------------------------------------------------------------------
// Middlebury .flo: "PIEH", int32 width, int32 height, then (u, v) float32
// pairs in row-major order, all little-endian.

inline Bytes encode_flo(const FlowField& flow) {
  Bytes out;
  out.reserve(12 + 8 * flow.size());
  for (char c : {'P', 'I', 'E', 'H'}) out.push_back(static_cast<std::uint8_t>(c));
  detail::put_u32le(out, static_cast<std::uint32_t>(flow.width()));
  detail::put_u32le(out, static_cast<std::uint32_t>(flow.height()));
  for (const auto& f : flow.pixels()) {
    require(std::isfinite(f.u) && std::isfinite(f.v), ErrorCode::NonFiniteValue,
            "flow vector is not finite");
    detail::put_f32le(out, f.u);
    detail::put_f32le(out, f.v);
  }
  return out;
}

inline FlowField decode_flo(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "PIEH", 4) != 0)
    fail(ErrorCode::BadMagic, ".flo stream does not start with PIEH");
  require(bytes.size() >= 12, ErrorCode::TruncatedPayload, ".flo header is shorter than 12 bytes");
  const auto width = static_cast<std::int32_t>(detail::get_u32le(bytes.data() + 4));
  const auto height = static_cast<std::int32_t>(detail::get_u32le(bytes.data() + 8));
  require(width >= 1 && height >= 1, ErrorCode::BadHeader,
          ".flo dimensions must be positive, got " + std::to_string(width) + "x" +
              std::to_string(height));
  const std::uint64_t pixels = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  require(pixels <= detail::kMaxPixels, ErrorCode::BadHeader, ".flo dimensions are implausibly large");
  detail::check_payload(bytes.size() - 12, 8 * pixels, ".flo");

  FlowField flow(width, height);
  const std::uint8_t* p = bytes.data() + 12;
  for (auto& f : flow.pixels()) {
    f.u = detail::get_f32(p, true);
    f.v = detail::get_f32(p + 4, true);
    p += 8;
    require(std::isfinite(f.u) && std::isfinite(f.v), ErrorCode::NonFiniteValue,
            ".flo contains a non-finite vector");
  }
  return flow;
}

// ---------------------------------------------------------------------------
// Grayscale PFM. Rows are stored bottom-to-top; a negative scale marks
// little-endian payloads. The encoder always writes scale -1.

inline Bytes encode_pfm(const DepthMap& depth) {
  const std::string header =
      "Pf\n" + std::to_string(depth.width()) + " " + std::to_string(depth.height()) + "\n-1\n";
  Bytes out(header.begin(), header.end());
  out.reserve(out.size() + 4 * depth.size());
  for (int y = depth.height() - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width(); ++x) {
      const float d = depth.at(x, y);
      require(std::isfinite(d), ErrorCode::NonFiniteValue, "depth value is not finite");
      detail::put_f32le(out, d);
    }
  }
  return out;
}

inline DepthMap decode_pfm(std::span<const std::uint8_t> bytes) {
  detail::HeaderReader reader(bytes, ErrorCode::BadHeader);
  const auto magic = reader.token();
  if (magic == "PF") fail(ErrorCode::UnsupportedColorPfm, "color PFM is not a depth map");
  if (magic != "Pf") fail(ErrorCode::BadHeader, "PFM magic must be Pf");
  const auto width = reader.integer();
  const auto height = reader.integer();
  require(width >= 1 && height >= 1 && width * height <= static_cast<long long>(detail::kMaxPixels),
          ErrorCode::BadHeader, "PFM dimensions out of range");
  const double scale = reader.real();
  require(std::isfinite(scale) && scale != 0.0, ErrorCode::BadHeader, "PFM scale must be non-zero");
  reader.single_space();
  const bool little_endian = scale < 0.0;

  const std::size_t offset = reader.position();
  const std::uint64_t pixels = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  detail::check_payload(bytes.size() - offset, 4 * pixels, "PFM");

  DepthMap depth(static_cast<int>(width), static_cast<int>(height));
  const std::uint8_t* p = bytes.data() + offset;
  for (int y = depth.height() - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width(); ++x, p += 4) {
      const float d = detail::get_f32(p, little_endian);
      require(std::isfinite(d), ErrorCode::NonFiniteValue, "PFM contains a non-finite value");
      depth.at(x, y) = d;
    }
  }
  return depth;
}

// ---------------------------------------------------------------------------
// PNG through libpng's simplified API. Output bytes depend only on the pixels
// and the linked libpng/zlib build; no timestamps or text chunks are written.

namespace detail {

inline Bytes png_encode(const std::uint8_t* pixels, int width, int height, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr))
    fail(ErrorCode::Io, std::string("PNG encode failed: ") + image.message);
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr))
    fail(ErrorCode::Io, std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

struct DecodedPng {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

inline DecodedPng png_decode(std::span<const std::uint8_t> bytes, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    const std::string message = image.message;
    png_image_free(&image);
    fail(ErrorCode::CorruptStream, "PNG header: " + message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    fail(ErrorCode::UnsupportedBitDepth, "only 8-bit PNG is supported");
  }
  require(static_cast<std::uint64_t>(image.width) * image.height <= kMaxPixels,
          ErrorCode::CorruptStream, "PNG dimensions are implausibly large");
  image.format = format;
  DecodedPng out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    fail(ErrorCode::CorruptStream, "PNG payload: " + message);
  }
  return out;
}

inline bool has_png_signature(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kSig, 8) == 0;
}

}  // namespace detail

inline Bytes encode_png(const Frame& frame) {
  static_assert(sizeof(Rgb) == 3);
  return detail::png_encode(reinterpret_cast<const std::uint8_t*>(frame.pixels().data()),
                            frame.width(), frame.height(), PNG_FORMAT_RGB);
}

/// Binary PPM (P6, maxval 255).
inline Bytes encode_ppm(const Frame& frame) {
  const std::string header =
      "P6\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
  Bytes out(header.begin(), header.end());
  for (const auto& px : frame.pixels()) out.insert(out.end(), {px.r, px.g, px.b});
  return out;
}

inline Frame decode_ppm(std::span<const std::uint8_t> bytes) {
  detail::HeaderReader reader(bytes, ErrorCode::CorruptStream);
  if (reader.token() != "P6") fail(ErrorCode::CorruptStream, "PPM magic must be P6");
  const auto width = reader.integer();
  const auto height = reader.integer();
  const auto maxval = reader.integer();
  require(width >= 1 && height >= 1 && width * height <= static_cast<long long>(detail::kMaxPixels),
          ErrorCode::CorruptStream, "PPM dimensions out of range");
  require(maxval == 255, ErrorCode::UnsupportedBitDepth, "PPM maxval must be 255");
  reader.single_space();
  const std::size_t offset = reader.position();
  const auto pixels = static_cast<std::uint64_t>(width * height);
  detail::check_payload(bytes.size() - offset, 3 * pixels, "PPM");
  Frame frame(static_cast<int>(width), static_cast<int>(height));
  const std::uint8_t* p = bytes.data() + offset;
  for (auto& px : frame.pixels()) {
    px = {p[0], p[1], p[2]};
    p += 3;
  }
  return frame;
}

/// Decodes PNG (any 8-bit color type, converted to RGB) or binary PPM.
inline Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
  if (!detail::has_png_signature(bytes)) fail(ErrorCode::CorruptStream, "not a PNG or P6 stream");
  auto png = detail::png_decode(bytes, PNG_FORMAT_RGB);
  Frame frame(png.width, png.height);
  std::memcpy(frame.pixels().data(), png.pixels.data(), png.pixels.size());
  return frame;
}

/// Masks are grayscale PNG holding 0 or 255.
inline Bytes encode_mask_png(const Mask& mask) {
  std::vector<std::uint8_t> gray(mask.size());
  std::transform(mask.pixels().begin(), mask.pixels().end(), gray.begin(),
                 [](std::uint8_t bit) -> std::uint8_t { return bit ? 255 : 0; });
  return detail::png_encode(gray.data(), mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

/// Any 8-bit PNG; luminance >= 128 counts as valid.
inline Mask decode_mask_png(std::span<const std::uint8_t> bytes) {
  if (!detail::has_png_signature(bytes)) fail(ErrorCode::CorruptStream, "mask is not a PNG stream");
  auto png = detail::png_decode(bytes, PNG_FORMAT_GRAY);
  Mask mask(png.width, png.height);
  std::transform(png.pixels.begin(), png.pixels.end(), mask.pixels().begin(),
                 [](std::uint8_t g) -> std::uint8_t { return g >= 128 ? 1 : 0; });
  return mask;
}

// ---------------------------------------------------------------------------
// Files.

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ---------------------------------------------------------------------------
// Bilinear sampling. Interpolation uses a + t(b - a) so equal neighbours are
// reproduced exactly, and t = 0 returns the stored texel.

struct FlowSample {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const FlowSample&, const FlowSample&) = default;
};

namespace detail {

inline double lerp(double a, double b, double t) noexcept { return a + t * (b - a); }

struct BilinearCell {
  int x0, y0, x1, y1;
  double fx, fy;
};

template <typename T>
BilinearCell bilinear_cell(const Raster<T>& field, double x, double y) {
  if (!(x >= 0.0 && y >= 0.0 && x <= field.width() - 1 && y <= field.height() - 1))
    fail(ErrorCode::OutOfBounds, "sample (" + std::to_string(x) + ", " + std::to_string(y) +
                                     ") outside " + std::to_string(field.width()) + "x" +
                                     std::to_string(field.height()));
  BilinearCell c;
  c.x0 = static_cast<int>(std::floor(x));
  c.y0 = static_cast<int>(std::floor(y));
  c.x1 = std::min(c.x0 + 1, field.width() - 1);
  c.y1 = std::min(c.y0 + 1, field.height() - 1);
  c.fx = x - c.x0;
  c.fy = y - c.y0;
  return c;
}

template <typename T, typename Get>
double bilinear_component(const Raster<T>& field, const BilinearCell& c, Get get) {
  const double top = lerp(get(field.at(c.x0, c.y0)), get(field.at(c.x1, c.y0)), c.fx);
  const double bottom = lerp(get(field.at(c.x0, c.y1)), get(field.at(c.x1, c.y1)), c.fx);
  return lerp(top, bottom, c.fy);
}

}  // namespace detail

/// Requires 0 <= x <= width-1 and 0 <= y <= height-1; callers clamp first.
inline FlowSample bilinear_sample(const FlowField& flow, double x, double y) {
  const auto cell = detail::bilinear_cell(flow, x, y);
  return {detail::bilinear_component(flow, cell, [](const FlowVector& f) { return double(f.u); }),
          detail::bilinear_component(flow, cell, [](const FlowVector& f) { return double(f.v); })};
}

inline double bilinear_sample(const DepthMap& depth, double x, double y) {
  const auto cell = detail::bilinear_cell(depth, x, y);
  return detail::bilinear_component(depth, cell, [](float d) { return double(d); });
}

inline Point2 clamp_to(const auto& raster, Point2 p) {
  return {std::clamp(p.x, 0.0, double(raster.width() - 1)),
          std::clamp(p.y, 0.0, double(raster.height() - 1))};
}

}  // namespace multicoin
