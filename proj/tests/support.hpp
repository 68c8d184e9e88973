#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "multicoin/media_io.hpp"
#include "multicoin/raster.hpp"
#include "multicoin/rng.hpp"

namespace testing_support {

using namespace multicoin;
namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    const auto base = fs::temp_directory_path();
    for (int attempt = 0;; ++attempt) {
      std::random_device rd;
      path_ = base / ("multicoin-test-" + std::to_string(rd()) + "-" + std::to_string(attempt));
      if (fs::create_directory(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline FlowField random_flow(Rng& rng, int w, int h, double limit) {
  FlowField f(w, h);
  for (auto& v : f.pixels()) v = {static_cast<float>(rng.uniform(-limit, limit)), static_cast<float>(rng.uniform(-limit, limit))};
  return f;
}

/// Vectors strictly inside the disk of radius `limit`.
inline FlowField random_flow_in_disk(Rng& rng, int w, int h, double limit) {
  FlowField f(w, h);
  for (auto& v : f.pixels()) {
    const double r = limit * std::sqrt(rng.uniform01()) * 0.999;
    const double a = rng.uniform(0.0, 6.283185307179586);
    v = {static_cast<float>(r * std::cos(a)), static_cast<float>(r * std::sin(a))};
  }
  return f;
}

inline DepthMap random_depth(Rng& rng, int w, int h, double lo, double hi) {
  DepthMap d(w, h);
  for (auto& v : d.pixels()) v = static_cast<float>(rng.uniform(lo, hi));
  return d;
}

inline Frame random_frame(Rng& rng, int w, int h) {
  Frame f(w, h);
  for (auto& p : f.pixels())
    p = {static_cast<std::uint8_t>(rng.uniform_int(0, 255)), static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
         static_cast<std::uint8_t>(rng.uniform_int(0, 255))};
  return f;
}

inline double iou(const Mask& a, const Mask& b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.pixels()[i] != 0, y = b.pixels()[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Zero-mean Gaussian noise on both components of every pixel, with standard
/// deviation `fraction` times the field's peak magnitude.
inline FlowField add_flow_noise(const FlowField& flow, double fraction, std::uint64_t seed) {
  double peak = 0.0;
  for (auto f : flow.pixels()) peak = std::max(peak, magnitude(f));
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, fraction * peak);
  FlowField out = flow;
  for (auto& f : out.pixels()) {
    f.u = static_cast<float>(f.u + noise(gen));
    f.v = static_cast<float>(f.v + noise(gen));
  }
  return out;
}

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

/// Runs an in-process entry point with std::cout / std::cerr captured.
template <typename Main>
CliResult capture(Main&& main_fn, std::vector<std::string> args) {
  args.insert(args.begin(), "multicoin");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  CliResult r;
  try {
    r.code = main_fn(static_cast<int>(argv.size()), argv.data());
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace testing_support
