#include <gtest/gtest.h>

#include "multicoin/manifest.hpp"
#include "multicoin/synthetic.hpp"
#include "multicoin/trajectory.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace multicoin;
using namespace testing_support;

namespace {

bool same_points(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].x != b[i].x || a[i].y != b[i].y) return false;
  return true;
}

}  // namespace

TEST(Seeds, BruteForceGreedyOnSmallFields) {
  Rng rng(17);
  for (int n = 0; n < 300; ++n) {
    const int w = static_cast<int>(rng.uniform_int(1, 16)), h = static_cast<int>(rng.uniform_int(1, 16));
    auto f = random_flow(rng, w, h, 3);
    // Quantize so ties and zeros actually occur.
    for (auto& v : f.pixels()) v = {std::round(v.u), std::round(v.v)};
    f.at(0, 0) = {1, 0};
    const int k = static_cast<int>(rng.uniform_int(1, 6));
    const double sep = static_cast<double>(rng.uniform_int(0, 5));
    ASSERT_TRUE(same_points(select_seeds(f, k, sep), oracle::seeds_greedy(f, k, sep))) << "case " << n;
  }
}

TEST(Seeds, Example12x12) {
  Rng rng(4);
  const auto f = random_flow(rng, 12, 12, 5);
  EXPECT_TRUE(same_points(select_seeds(f, 4, 3), oracle::seeds_greedy(f, 4, 3)));
}

TEST(Seeds, InvariantUnderAppendedStaticPixels) {
  Rng rng(8);
  const auto f = random_flow(rng, 8, 8, 4);
  FlowField wider(12, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) wider.at(x, y) = f.at(x, y);
  EXPECT_TRUE(same_points(select_seeds(f, 5, 2), select_seeds(wider, 5, 2)));
}

TEST(Seeds, NoMotion) { EXPECT_THROW(select_seeds(FlowField(4, 4), 3, 1), Error); }

TEST(Track, UniformAdvection) {
  const auto clip = synthetic::make_clip(synthetic::Uniform{1, 0}, 16, 16, 4);
  const Point2 seed{8, 8};
  const auto set = track_points(clip.flows, std::span(&seed, 1));
  ASSERT_EQ(set.frame_count, 5);
  const auto& pts = set.trajectories.at(0).points;
  ASSERT_EQ(pts.size(), 5u);
  for (int t = 0; t < 5; ++t) {
    EXPECT_EQ(pts[static_cast<std::size_t>(t)].x, 8 + t);
    EXPECT_EQ(pts[static_cast<std::size_t>(t)].y, 8);
    ASSERT_TRUE(pts[static_cast<std::size_t>(t)].flow);
    EXPECT_EQ(pts[static_cast<std::size_t>(t)].flow->u, 1.0);
  }
}

TEST(Track, ClampsAtBorder) {
  const auto clip = synthetic::make_clip(synthetic::Uniform{3, -2}, 8, 8, 5);
  const Point2 seed{6, 1};
  const auto set = track_points(clip.flows, std::span(&seed, 1));
  const auto& last = set.trajectories[0].points.back();
  EXPECT_EQ(last.x, 7);
  EXPECT_EQ(last.y, 0);
}

TEST(Track, AgreesWithScalarEuler) {
  Rng rng(21);
  std::vector<FlowField> flows;
  for (int i = 0; i < 6; ++i) flows.push_back(random_flow(rng, 20, 14, 2.5));
  std::vector<Point2> seeds;
  for (int i = 0; i < 30; ++i) seeds.push_back({rng.uniform(0, 19), rng.uniform(0, 13)});
  const auto set = track_points(flows, seeds);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const auto path = oracle::advect(flows, seeds[s]);
    const auto& pts = set.trajectories[s].points;
    for (std::size_t t = 0; t < path.size(); ++t) {
      ASSERT_EQ(pts[t].x, path[t].x);
      ASSERT_EQ(pts[t].y, path[t].y);
    }
  }
}

TEST(Track, RotationMatchesStepOracle) {
  const auto clip = synthetic::make_clip(synthetic::Rotation{{15.5, 15.5}, 0.05}, 32, 32, 12);
  const std::vector<Point2> seeds{{20, 15.5}, {4.25, 9.75}, {15.5, 15.5}, {28, 30}};
  const auto set = track_points(clip.flows, seeds);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const auto path = oracle::advect(clip.flows, seeds[s]);
    for (std::size_t t = 0; t < path.size(); ++t) {
      ASSERT_EQ(set.trajectories[s].points[t].x, path[t].x);
      ASSERT_EQ(set.trajectories[s].points[t].y, path[t].y);
    }
  }
}

TEST(Track, ZeroFlowIsStationary) {
  const std::vector<FlowField> flows(5, FlowField(10, 10));
  const Point2 seed{3.5, 7.25};
  const auto set = track_points(flows, std::span(&seed, 1));
  for (const auto& p : set.trajectories[0].points) {
    EXPECT_EQ(p.x, 3.5);
    EXPECT_EQ(p.y, 7.25);
  }
}

TEST(Track, Rejections) {
  const FlowField f(4, 4);
  const Point2 outside{4.5, 0};
  EXPECT_THROW(track_points(std::span(&f, 1), std::span(&outside, 1)), Error);
  EXPECT_THROW(track_points({}, std::span(&outside, 1)), Error);
}

TEST(Depth, AttachSamplesPerFrame) {
  const auto clip = synthetic::make_clip(synthetic::MovingSquare{}, 16, 16, 3);
  auto seeds = std::vector<Point2>{{0, 0}};
  auto set = attach_depth(track_points(clip.flows, seeds), clip.depths);
  for (const auto& p : set.trajectories[0].points) EXPECT_EQ(*p.depth, synthetic::kFarDepth);
  EXPECT_THROW(attach_depth(set, std::span(clip.depths).first(2)), Error);
}

TEST(Depth, ConstantAndGradient) {
  const std::vector<FlowField> flows(3, FlowField(8, 8));
  const std::vector<Point2> seeds{{2.5, 4}};
  const auto constant = attach_depth(track_points(flows, seeds), std::vector<DepthMap>(4, DepthMap(8, 8, 5.0f)));
  for (const auto& p : constant.trajectories[0].points) EXPECT_EQ(*p.depth, 5.0);

  DepthMap ramp(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) ramp.at(x, y) = static_cast<float>(x);
  const auto graded = attach_depth(track_points(flows, seeds), std::vector<DepthMap>(4, ramp));
  for (const auto& p : graded.trajectories[0].points) EXPECT_EQ(*p.depth, 2.5);
}

TEST(Seeds, SingleMovingPixel) {
  FlowField f(8, 6);
  f.at(5, 3) = {1.5f, -2.0f};
  const auto seeds = select_seeds(f, 4, 2);
  ASSERT_EQ(seeds.size(), 1u);
  EXPECT_EQ(seeds[0].x, 5);
  EXPECT_EQ(seeds[0].y, 3);
}

TEST(Seeds, UniformFlowPicksFirstPixel) {
  const auto seeds = select_seeds(FlowField(9, 7, {1, 1}), 1, 4);
  ASSERT_EQ(seeds.size(), 1u);
  EXPECT_EQ(seeds[0].x, 0);
  EXPECT_EQ(seeds[0].y, 0);
}

TEST(AutoTrajectory, IdenticalFramesAreStationary) {
  synthetic::MovingSquare sq;
  sq.size = 16;
  const auto clip = synthetic::make_clip(sq, 48, 48, 1);
  const auto set = auto_trajectory(clip.frames[0], clip.frames[0], {6, 8, 0.8});
  ASSERT_FALSE(set.trajectories.empty());
  for (const auto& traj : set.trajectories)
    for (const auto& p : traj.points) {
      EXPECT_EQ(p.x, traj.points[0].x);
      EXPECT_EQ(p.y, traj.points[0].y);
    }
}

TEST(AutoTrajectory, SecondDifferencesVanish) {
  synthetic::MovingSquare sq;
  sq.size = 20;
  sq.vx = 2;
  sq.vy = -1;
  sq.origin_x = 8;
  sq.origin_y = 30;
  const auto clip = synthetic::make_clip(sq, 64, 64, 5);
  const auto set = auto_trajectory(clip.frames.front(), clip.frames.back(), {11, 8, 0.8});
  for (const auto& traj : set.trajectories)
    for (std::size_t t = 1; t + 1 < traj.points.size(); ++t) {
      EXPECT_NEAR(traj.points[t + 1].x - 2 * traj.points[t].x + traj.points[t - 1].x, 0, 1e-12);
      EXPECT_NEAR(traj.points[t + 1].y - 2 * traj.points[t].y + traj.points[t - 1].y, 0, 1e-12);
    }
}

TEST(AutoTrajectory, RecoversTranslation) {
  synthetic::MovingSquare sq;
  sq.size = 20;
  sq.vx = 3;
  sq.vy = 2;
  sq.origin_x = 10;
  sq.origin_y = 12;
  const auto clip = synthetic::make_clip(sq, 64, 64, 4);
  const auto set = auto_trajectory(clip.frames.front(), clip.frames.back(), {9, 8, 0.8});
  ASSERT_FALSE(set.trajectories.empty());
  EXPECT_EQ(set.frame_count, 9);
  for (const auto& traj : set.trajectories) {
    const auto& a = traj.points.front();
    const auto& b = traj.points.back();
    EXPECT_NEAR(b.x - a.x, 12, 1e-9);
    EXPECT_NEAR(b.y - a.y, 8, 1e-9);
    EXPECT_NEAR(traj.points[4].x, (a.x + b.x) / 2, 1e-9);
  }
}

TEST(AutoTrajectory, NoMatchesOnFlatFrames) {
  const Frame flat(32, 32, {80, 80, 80});
  EXPECT_THROW(auto_trajectory(flat, flat, {4, 8, 0.8}), Error);
}

TEST(AutoTrajectory, AcceptsCustomMatcher) {
  struct Fixed {
    std::vector<MatchPair> match(const Frame&, const Frame&) const { return {{{1, 1}, {5, 3}, 0.99}}; }
  };
  static_assert(FeatureMatcher<Fixed>);
  const auto set = auto_trajectory(Frame(8, 8), Frame(8, 8), {3, 8, 0.5}, Fixed{});
  ASSERT_EQ(set.trajectories.size(), 1u);
  EXPECT_EQ(set.trajectories[0].points[1].x, 3);
  EXPECT_EQ(set.trajectories[0].points[1].y, 2);
}

TEST(Keyframes, PlanRules) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto plan = sample_keyframes(16, seed);
    ASSERT_EQ(plan.positions.front(), 0);
    ASSERT_EQ(plan.positions.back(), 15);
    ASSERT_TRUE(std::is_sorted(plan.positions.begin(), plan.positions.end()));
    ASSERT_EQ(std::adjacent_find(plan.positions.begin(), plan.positions.end()), plan.positions.end());
    ASSERT_LE(plan.positions.size(), 7u);
    ASSERT_EQ(plan, sample_keyframes(16, seed));
  }
  EXPECT_EQ(sample_keyframes(2, 3).positions, (std::vector<int>{0, 1}));
}

TEST(Keyframes, InteriorCountCoversRange) {
  std::array<int, 6> seen{};
  for (std::uint64_t seed = 0; seed < 10000; ++seed) ++seen[sample_keyframes(32, seed).positions.size() - 2];
  for (int c : seen) EXPECT_GT(c, 1400);
}

TEST(Keyframes, SeededRegression) {
  EXPECT_EQ(sample_keyframes(64, 42).positions, (std::vector<int>{0, 63}));
  EXPECT_EQ(sample_keyframes(64, 1).positions, (std::vector<int>{0, 7, 17, 63}));
  EXPECT_EQ(sample_keyframes(64, 3).positions, (std::vector<int>{0, 13, 24, 36, 52, 61, 63}));
  EXPECT_EQ(sample_keyframes(64, 7).positions, (std::vector<int>{0, 9, 44, 45, 63}));
}

TEST(Densify, FillsGapsAndDerivesFlow) {
  Trajectory t{3, {{0, 0, 0, 1.0, std::nullopt}, {4, 8, 4, 3.0, std::nullopt}}};
  const auto d = densify(t);
  ASSERT_EQ(d.points.size(), 5u);
  EXPECT_EQ(d.points[2].x, 4);
  EXPECT_EQ(d.points[2].y, 2);
  EXPECT_EQ(*d.points[2].depth, 2.0);
  for (const auto& p : d.points) {
    EXPECT_EQ(p.flow->u, 2);
    EXPECT_EQ(p.flow->v, 1);
  }
  Trajectory single{0, {{2, 1, 1, std::nullopt, std::nullopt}}};
  EXPECT_EQ(densify(single).points[0].flow->u, 0.0);
}

TEST(Manifest, JsonRoundTrip) {
  const auto clip = synthetic::make_clip(synthetic::Rotation{{7.5, 7.5}, 0.1}, 16, 16, 4);
  const std::vector<Point2> seeds{{3, 3}, {12, 9}};
  const auto set = attach_depth(track_points(clip.flows, seeds), clip.depths);
  const auto j = to_json(set);
  EXPECT_EQ(trajectory_set_from_json(j), set);
  EXPECT_EQ(trajectory_set_from_json(parse_json(dump_json(j))), set);
}

TEST(Manifest, PathAwareErrors) {
  auto j = parse_json(R"({"width":8,"height":8,"frames":3,"trajectories":[{"id":0,"points":[{"t":0,"x":1,"y":"a"}]}]})");
  try {
    trajectory_set_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaViolation);
    EXPECT_NE(std::string(e.what()).find("/trajectories/0/points/0/y"), std::string::npos) << e.what();
  }
  j = parse_json(R"({"width":8,"height":8,"frames":3,"trajectories":[{"id":0,"points":{}}]})");
  try {
    trajectory_set_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/trajectories/0/points"), std::string::npos) << e.what();
  }
  j = parse_json(R"({"width":8,"height":8,"frames":3,"trajectories":[{"id":0,"points":[{"t":5,"x":1,"y":1}]}]})");
  EXPECT_THROW(trajectory_set_from_json(j), Error);
  j = parse_json(R"({"width":8,"height":8,"frames":3,"trajectories":[{"id":0,"points":[{"t":0,"x":9,"y":1}]}]})");
  EXPECT_THROW(trajectory_set_from_json(j), Error);
}
