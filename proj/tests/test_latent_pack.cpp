#include <gtest/gtest.h>

#include "multicoin/latent_pack.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace multicoin;
using namespace testing_support;

TEST(Layout, PaperShapes) {
  const auto a = latent_layout(32, 352, 640);
  EXPECT_EQ(a.latent_frames, 5);
  EXPECT_EQ(a.latent_height, 44);
  EXPECT_EQ(a.latent_width, 80);
  EXPECT_EQ(a.tokens_per_frame, 22 * 40);
  EXPECT_EQ(a.total_tokens, 5 * 880);
  EXPECT_EQ(latent_layout(64, 352, 640).latent_frames, 9);
  EXPECT_EQ(latent_layout(1, 16, 16).latent_frames, 1);
}

TEST(Layout, FormulaAgainstCounting) {
  // Causal: the first frame alone, then one latent per started group of 8.
  for (int t = 1; t <= 100; ++t) {
    int groups = 1, pending = 0;
    for (int f = 1; f < t; ++f)
      if (pending++ % 8 == 0) ++groups;
    ASSERT_EQ(latent_layout(t, 16, 16).latent_frames, groups) << t;
    VaeLayoutConfig nc;
    nc.causal_first_frame = false;
    ASSERT_EQ(latent_layout(t, 16, 16, nc).latent_frames, (t + 7) / 8) << t;
  }
}

TEST(Layout, Rejections) {
  EXPECT_THROW(latent_layout(32, 350, 640), Error);
  EXPECT_THROW(latent_layout(0, 352, 640), Error);
}

TEST(Layout, BranchManifest) {
  const auto j = layout_manifest_json(32, 352, 640, {}, 1152);
  EXPECT_EQ(j["latent_frames"], 5);
  EXPECT_EQ(j["branches"]["content_in_channels"], 33);
  EXPECT_EQ(j["branches"]["motion_in_channels"], 32);
  EXPECT_EQ(j["branches"]["fused_width"], 2304);
  EXPECT_EQ(j["branches"]["content_tokens"], j["branches"]["motion_tokens"]);
  EXPECT_EQ(j["total_tokens"], 4400);
}

TEST(Curriculum, Conformance) {
  const auto m = curriculum_manifest();
  ASSERT_EQ(m.stages.size(), 4u);
  const std::vector<std::string> names{"interpolation", "dense_motion", "sparse_motion", "target_regions"};
  const std::vector<int> steps{5000, 2000, 2000, 2000};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(m.stages[i].name, names[i]);
    EXPECT_EQ(m.stages[i].steps, steps[i]);
    EXPECT_EQ(m.stages[i].content_dropout_p, i == 3 ? 0.5 : 0.0);
  }
  EXPECT_EQ(m.stages[0].enabled_conditions, std::vector<std::string>{"keyframes"});
  EXPECT_EQ(m.stages[3].enabled_conditions.back(), "target_masks");
}

TEST(Curriculum, JsonRoundTripAndValidation) {
  const auto j = to_json(curriculum_manifest());
  const auto back = curriculum_from_json(parse_json(dump_json(j)));
  EXPECT_EQ(to_json(back), j);

  auto swapped = j;
  std::swap(swapped["stages"][1], swapped["stages"][2]);
  EXPECT_THROW(curriculum_from_json(swapped), Error);
  auto early_dropout = j;
  early_dropout["stages"][1]["content_dropout_p"] = 0.5;
  EXPECT_THROW(curriculum_from_json(early_dropout), Error);
  auto shrinking = j;
  shrinking["stages"][2]["enabled_conditions"] = Json::array({"keyframes"});
  EXPECT_THROW(curriculum_from_json(shrinking), Error);
}

TEST(Dropout, MonteCarloRate) {
  int dropped = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) dropped += should_drop_content(0.5, seed);
  EXPECT_GE(dropped, 4800);
  EXPECT_LE(dropped, 5200);
  EXPECT_FALSE(should_drop_content(0.0, 1));
  EXPECT_TRUE(should_drop_content(1.0, 1));
  EXPECT_THROW(should_drop_content(1.5, 1), Error);
}

TEST(Dropout, BlanksTargetsOnly) {
  AugmentedClip clip;
  clip.frames.assign(3, Frame(2, 2, {7, 7, 7}));
  clip.masks.assign(3, Mask(2, 2, 1));
  clip.keyframe_positions = {0, 2};
  clip.target_positions = {1};
  const auto out = condition_dropout(clip, 1.0, 0);
  EXPECT_TRUE(out.dropped);
  EXPECT_EQ(count_set(out.clip.masks[1]), 0u);
  EXPECT_EQ(out.clip.frames[1].at(0, 0), (Rgb{0, 0, 0}));
  EXPECT_EQ(out.clip.frames[0].at(0, 0), (Rgb{7, 7, 7}));
  EXPECT_TRUE(out.clip.target_positions.empty());
  EXPECT_FALSE(condition_dropout(clip, 0.0, 0).dropped);
}

TEST(Loss, MatchesTwoPassOracle) {
  Rng rng(14);
  for (int n = 0; n < 200; ++n) {
    const std::size_t c = static_cast<std::size_t>(rng.uniform_int(1, 4)), h = static_cast<std::size_t>(rng.uniform_int(1, 30));
    std::vector<double> a(c * h * h), b(c * h * h);
    const double scale = std::exp(rng.uniform(-10, 10));
    for (auto& v : a) v = rng.uniform(-scale, scale);
    for (auto& v : b) v = rng.uniform(-scale, scale);
    const double got = diffusion_loss(ValueGrid::of({c, h, h}, a), ValueGrid::of({c, h, h}, b));
    const double want = oracle::mse_two_pass(a, b);
    ASSERT_NEAR(got, want, 1e-12 * want);
  }
  EXPECT_EQ(diffusion_loss(ValueGrid::of({2}, {1, 2}), ValueGrid::of({2}, {1, 2})), 0.0);
  EXPECT_THROW(diffusion_loss(ValueGrid::of({2}, {1, 2}), ValueGrid::of({1, 2}, {1, 2})), Error);
  EXPECT_THROW(ValueGrid::of({3}, {1, 2}), Error);
}

TEST(Layout, TemporalStepProperty) {
  for (int f : {2, 4, 8}) {
    VaeLayoutConfig cfg;
    cfg.temporal_factor = f;
    for (int t = 1; t <= 80; ++t) {
      const int here = latent_layout(t, 16, 16, cfg).latent_frames;
      ASSERT_LE(here, latent_layout(t + 1, 16, 16, cfg).latent_frames);
      ASSERT_EQ(latent_layout(t + f, 16, 16, cfg).latent_frames, here + 1);
    }
  }
}

TEST(Layout, BranchChannelsOverRandomConfigs) {
  Rng rng(40);
  for (int n = 0; n < 500; ++n) {
    VaeLayoutConfig cfg;
    cfg.temporal_factor = static_cast<int>(rng.uniform_int(1, 8));
    cfg.spatial_factor = static_cast<int>(rng.uniform_int(1, 8));
    cfg.patch_size = static_cast<int>(rng.uniform_int(1, 4));
    cfg.latent_channels = static_cast<int>(rng.uniform_int(1, 64));
    cfg.causal_first_frame = rng.uniform01() < 0.5;
    const int unit = cfg.spatial_factor * cfg.patch_size;
    const auto layout = latent_layout(static_cast<int>(rng.uniform_int(1, 64)), unit * static_cast<int>(rng.uniform_int(1, 10)),
                                      unit * static_cast<int>(rng.uniform_int(1, 10)), cfg);
    ASSERT_EQ(layout.total_tokens, layout.latent_frames * layout.tokens_per_frame);
    const int embed = static_cast<int>(rng.uniform_int(1, 2048));
    const auto b = branch_manifest(layout, cfg, embed);
    ASSERT_EQ(b.content_in_channels, 2 * cfg.latent_channels + 1);
    ASSERT_EQ(b.motion_in_channels, 2 * cfg.latent_channels);
    ASSERT_EQ(b.content_tokens, b.motion_tokens);
    ASSERT_EQ(b.fused_width, 2 * embed);
    ASSERT_EQ(b.output_width, embed);
  }
  const auto small = branch_manifest(latent_layout(32, 352, 640), {}, 64);
  EXPECT_EQ(small.fused_width, 128);
  EXPECT_EQ(small.output_width, 64);
  EXPECT_EQ(small.content_tokens, 5 * 880);
}

TEST(Loss, UnitOffsetIsOne) {
  Rng rng(41);
  std::vector<double> a(300), b(300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.uniform(-3, 3);
    b[i] = a[i] + 1;
  }
  EXPECT_NEAR(diffusion_loss(ValueGrid::of({3, 10, 10}, b), ValueGrid::of({3, 10, 10}, a)), 1.0, 1e-12);
}
