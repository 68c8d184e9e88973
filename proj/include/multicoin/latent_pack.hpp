#pragma once

// Layout bookkeeping for a DiT backbone with a causal 3D VAE: latent shape
// and token counts, dual-branch channel manifests, the stage-wise curriculum,
// content dropout, and the noise-prediction MSE.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "multicoin/error.hpp"
#include "multicoin/json_io.hpp"
#include "multicoin/regions.hpp"
#include "multicoin/rng.hpp"

namespace multicoin {

struct VaeLayoutConfig {
  int temporal_factor = 8;
  int spatial_factor = 8;
  int latent_channels = 16;
  bool causal_first_frame = true;
  int patch_size = 2;

  void validate() const {
    require(temporal_factor >= 1 && spatial_factor >= 1 && latent_channels >= 1 && patch_size >= 1,
            ErrorCode::BadParams, "VAE layout factors must be >= 1");
  }
};

struct LatentLayout {
  int latent_frames = 0;
  int latent_height = 0;
  int latent_width = 0;
  long long tokens_per_frame = 0;
  long long total_tokens = 0;

  friend bool operator==(const LatentLayout&, const LatentLayout&) = default;
};

inline constexpr int ceil_div(int a, int b) { return (a + b - 1) / b; }

/// The causal VAE keeps the first frame on its own and compresses the rest in
/// groups of temporal_factor: 32 frames -> 5 latent frames at factor 8.
inline LatentLayout latent_layout(int frames, int height, int width, const VaeLayoutConfig& cfg = {}) {
  cfg.validate();
  require(frames >= 1, ErrorCode::BadParams, "latent layout needs at least one frame");
  require(height >= 1 && width >= 1, ErrorCode::BadParams, "latent layout needs positive size");
  const int cell = cfg.spatial_factor * cfg.patch_size;
  if (height % cell != 0 || width % cell != 0)
    fail(ErrorCode::IndivisibleDims, std::to_string(height) + "x" + std::to_string(width) +
                                         " is not divisible by spatial_factor*patch_size=" + std::to_string(cell));
  LatentLayout out;
  out.latent_frames = cfg.causal_first_frame ? 1 + ceil_div(frames - 1, cfg.temporal_factor)
                                             : ceil_div(frames, cfg.temporal_factor);
  out.latent_height = height / cfg.spatial_factor;
  out.latent_width = width / cfg.spatial_factor;
  out.tokens_per_frame =
      static_cast<long long>(out.latent_height / cfg.patch_size) * (out.latent_width / cfg.patch_size);
  out.total_tokens = out.latent_frames * out.tokens_per_frame;
  return out;
}

/// Channel bookkeeping for the two conditioning branches. Nothing is executed;
/// the final linear stage maps fused_width back to output_width.
struct BranchManifest {
  int content_in_channels = 0;  // noise latent + content latent + mask
  int motion_in_channels = 0;   // flow latent + depth latent
  long long content_tokens = 0;
  long long motion_tokens = 0;
  int branch_width = 0;
  int fused_width = 0;
  int output_width = 0;

  friend bool operator==(const BranchManifest&, const BranchManifest&) = default;
};

inline constexpr int kMaskChannels = 1;

inline BranchManifest branch_manifest(const LatentLayout& layout, const VaeLayoutConfig& cfg, int embed_dim) {
  cfg.validate();
  require(layout.total_tokens > 0, ErrorCode::BadParams, "layout must have tokens");
  require(embed_dim >= 1, ErrorCode::BadParams, "embed_dim must be >= 1");
  const int c = cfg.latent_channels;
  return {2 * c + kMaskChannels, 2 * c, layout.total_tokens, layout.total_tokens, embed_dim, 2 * embed_dim, embed_dim};
}

inline Json layout_manifest_json(int frames, int height, int width, const VaeLayoutConfig& cfg, int embed_dim) {
  const auto layout = latent_layout(frames, height, width, cfg);
  const auto branches = branch_manifest(layout, cfg, embed_dim);
  return {
      {"config",
       {{"temporal_factor", cfg.temporal_factor},
        {"spatial_factor", cfg.spatial_factor},
        {"latent_channels", cfg.latent_channels},
        {"causal_first_frame", cfg.causal_first_frame},
        {"patch_size", cfg.patch_size},
        {"embed_dim", embed_dim}}},
      {"input", {{"frames", frames}, {"height", height}, {"width", width}}},
      {"latent_frames", layout.latent_frames},
      {"latent_height", layout.latent_height},
      {"latent_width", layout.latent_width},
      {"tokens_per_frame", layout.tokens_per_frame},
      {"total_tokens", layout.total_tokens},
      {"branches",
       {{"content_in_channels", branches.content_in_channels},
        {"motion_in_channels", branches.motion_in_channels},
        {"mask_channels", kMaskChannels},
        {"content_tokens", branches.content_tokens},
        {"motion_tokens", branches.motion_tokens},
        {"branch_width", branches.branch_width},
        {"fused_width", branches.fused_width},
        {"output_width", branches.output_width}}},
  };
}

// ---------------------------------------------------------------------------
// Curriculum.

struct CurriculumStage {
  std::string name;
  std::vector<std::string> enabled_conditions;
  int steps = 0;
  double content_dropout_p = 0.0;

  friend bool operator==(const CurriculumStage&, const CurriculumStage&) = default;
};

struct CurriculumManifest {
  std::vector<CurriculumStage> stages;

  friend bool operator==(const CurriculumManifest&, const CurriculumManifest&) = default;
};

struct CurriculumSteps {
  int interpolation = 5000;
  int dense_motion = 2000;
  int sparse_motion = 2000;
  int target_regions = 2000;
};

inline constexpr double kContentDropoutP = 0.5;
inline const std::vector<std::string> kStageOrder = {"interpolation", "dense_motion", "sparse_motion",
                                                     "target_regions"};

/// Conditions accumulate: each stage keeps everything enabled before it.
inline CurriculumManifest curriculum_manifest(const CurriculumSteps& steps = {}) {
  for (int s : {steps.interpolation, steps.dense_motion, steps.sparse_motion, steps.target_regions})
    require(s >= 0, ErrorCode::BadParams, "stage steps must be >= 0");
  std::vector<std::string> enabled = {"keyframes"};
  CurriculumManifest m;
  m.stages.push_back({"interpolation", enabled, steps.interpolation, 0.0});
  enabled.insert(enabled.end(), {"dense_flow", "dense_depth"});
  m.stages.push_back({"dense_motion", enabled, steps.dense_motion, 0.0});
  enabled.insert(enabled.end(), {"sparse_flow", "sparse_depth"});
  m.stages.push_back({"sparse_motion", enabled, steps.sparse_motion, 0.0});
  enabled.insert(enabled.end(), {"target_regions", "target_masks"});
  m.stages.push_back({"target_regions", enabled, steps.target_regions, kContentDropoutP});
  return m;
}

inline Json to_json(const CurriculumManifest& m) {
  Json stages = Json::array();
  for (const auto& s : m.stages)
    stages.push_back({{"name", s.name},
                      {"enabled_conditions", s.enabled_conditions},
                      {"steps", s.steps},
                      {"content_dropout_p", s.content_dropout_p}});
  return {{"stages", std::move(stages)}};
}

/// Parses and checks the structural rules: the four stages in order,
/// monotonically growing conditions, dropout only in the last stage.
inline CurriculumManifest curriculum_from_json(const Json& j, const std::string& path = "") {
  const auto spath = child_path(path, "stages");
  const auto& stages = require_array(member(j, "stages", path), spath);
  if (stages.size() != kStageOrder.size()) schema_error(spath, "expected exactly 4 stages");
  CurriculumManifest m;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto p = child_path(spath, i);
    CurriculumStage s;
    s.name = field<std::string>(stages[i], "name", p);
    if (s.name != kStageOrder[i]) schema_error(child_path(p, "name"), "expected stage '" + kStageOrder[i] + "'");
    const auto cpath = child_path(p, "enabled_conditions");
    const auto& conds = require_array(member(stages[i], "enabled_conditions", p), cpath);
    for (std::size_t k = 0; k < conds.size(); ++k) s.enabled_conditions.push_back(as<std::string>(conds[k], child_path(cpath, k)));
    s.steps = field<int>(stages[i], "steps", p);
    if (s.steps < 0) schema_error(child_path(p, "steps"), "must be >= 0");
    s.content_dropout_p = field<double>(stages[i], "content_dropout_p", p);
    const bool last = i + 1 == stages.size();
    if (last ? s.content_dropout_p < 0.0 || s.content_dropout_p > 1.0 : s.content_dropout_p != 0.0)
      schema_error(child_path(p, "content_dropout_p"), last ? "must lie in [0, 1]" : "must be 0 before the final stage");
    if (!m.stages.empty()) {
      const auto& prev = m.stages.back().enabled_conditions;
      const std::set<std::string> now(s.enabled_conditions.begin(), s.enabled_conditions.end());
      for (const auto& c : prev)
        if (!now.contains(c)) schema_error(cpath, "drops condition '" + c + "' enabled earlier");
    }
    m.stages.push_back(std::move(s));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Content dropout.

/// One Bernoulli(p) draw from the seed's stream.
inline bool should_drop_content(double p, std::uint64_t seed) {
  require(std::isfinite(p) && p >= 0.0 && p <= 1.0, ErrorCode::BadParams, "dropout probability must lie in [0, 1]");
  return Rng(seed).uniform01() < p;
}

struct DropoutOutcome {
  AugmentedClip clip;
  bool dropped = false;
};

/// With probability p blacks every target slot and zeroes its mask; the slot
/// then counts as empty. Keyframes are never touched.
inline DropoutOutcome condition_dropout(AugmentedClip clip, double p, std::uint64_t seed) {
  DropoutOutcome out{std::move(clip), should_drop_content(p, seed)};
  if (!out.dropped) return out;
  for (int index : out.clip.target_positions) {
    auto& frame = out.clip.frames[static_cast<std::size_t>(index)];
    auto& mask = out.clip.masks[static_cast<std::size_t>(index)];
    frame = Frame(frame.width(), frame.height());
    mask = Mask(mask.width(), mask.height(), 0);
  }
  out.clip.target_positions.clear();
  return out;
}

// ---------------------------------------------------------------------------

struct ValueGrid {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  static ValueGrid of(std::vector<std::size_t> shape, std::vector<double> values) {
    const auto n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    require(n == values.size(), ErrorCode::ShapeMismatch, "grid values do not match its shape");
    return {std::move(shape), std::move(values)};
  }
};

/// Mean squared error between predicted and true noise, with compensated
/// summation.
inline double diffusion_loss(const ValueGrid& predicted, const ValueGrid& target) {
  require(predicted.shape == target.shape && predicted.values.size() == target.values.size(),
          ErrorCode::ShapeMismatch, "noise grids differ in shape");
  require(!predicted.values.empty(), ErrorCode::EmptyInput, "noise grids are empty");
  double sum = 0.0, carry = 0.0;
  for (std::size_t i = 0; i < predicted.values.size(); ++i) {
    const double d = predicted.values[i] - target.values[i];
    const double term = d * d;
    const double next = sum + term;
    carry += std::abs(sum) >= term ? (sum - next) + term : (term - next) + sum;
    sum = next;
  }
  return (sum + carry) / static_cast<double>(predicted.values.size());
}

}  // namespace multicoin
