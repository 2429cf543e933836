#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "grasplab/core/grid.hpp"
#include "grasplab/core/random.hpp"
#include "grasplab/sim/scene.hpp"
#include "grasplab/sim/simulator.hpp"

using namespace grasplab;
using namespace grasplab::sim;

namespace {

Scene single_upright_cylinder(double x = 0.0, double y = 0.0) {
  Scene s;
  s.objects.push_back(PlacedObject{ObjectSpec::cylinder(), x, y, 0.0, RestingPose::upright});
  s.rng_seed = 11;
  return s;
}

GraspPose at_height(const Scene& s, GraspPose p, const GraspConfig& c) {
  return with_height(render_depth(s), p, c);
}

}  // namespace

TEST(Spawn, EmptySceneRendersOnlyFloorAndWalls) {
  const Scene s = spawn_scene(0, ObjectSpec::cylinder(), 3);
  EXPECT_TRUE(s.objects.empty());
  const auto img = render_depth(s);
  ASSERT_EQ(img.width(), 110);
  ASSERT_EQ(img.height(), 110);
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) {
      const double x = std::abs(img.x_of(c)), y = std::abs(img.y_of(r));
      const bool interior = x < 80 && y < 80;
      const bool wall = !interior && x < 90 && y < 90;
      EXPECT_EQ(img.at(r, c), wall ? 80.0f : 0.0f) << r << "," << c;
    }
}

TEST(Spawn, DeterministicForFixedSeed) {
  EXPECT_EQ(spawn_scene(1, ObjectSpec::cylinder(), 7), spawn_scene(1, ObjectSpec::cylinder(), 7));
  const auto a = spawn_scene(10, ObjectSpec::cylinder(), 7);
  EXPECT_EQ(render_depth(a), render_depth(a));
  EXPECT_NE(spawn_scene(10, ObjectSpec::cylinder(), 7), spawn_scene(10, ObjectSpec::cylinder(), 8));
}

TEST(Spawn, TwentyCylindersDoNotOverlap) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const SpawnOptions opts;
    const Scene s = spawn_scene(20, ObjectSpec::cylinder(), seed, opts);
    ASSERT_EQ(s.objects.size(), 20u);
    // Point-sampling oracle: no sample point is covered by two footprints shrunk by the tolerance,
    // and every footprint point lies inside the interior.
    for (double y = -80; y <= 80; y += 0.5)
      for (double x = -80; x <= 80; x += 0.5) {
        int covering = 0;
        for (const auto& o : s.objects) {
          bool deep = true;
          for (double dx : {-opts.contact_tolerance_mm, opts.contact_tolerance_mm})
            for (double dy : {-opts.contact_tolerance_mm, opts.contact_tolerance_mm})
              deep = deep && o.height_at(x + dx, y + dy) > 0;
          covering += deep;
        }
        ASSERT_LE(covering, 1) << "at " << x << "," << y;
      }
    for (const auto& o : s.objects)
      for (const auto& v : o.footprint()) {
        EXPECT_LE(std::abs(v.x), 80.0 + 1e-9);
        EXPECT_LE(std::abs(v.y), 80.0 + 1e-9);
      }
    EXPECT_GE(min_clearance(s), 0.0);
  }
}

TEST(Spawn, OverfullBinThrows) {
  EXPECT_THROW(spawn_scene(400, ObjectSpec::cube(40), 1), PlacementError);
  EXPECT_THROW(spawn_scene(-1, ObjectSpec::cylinder(), 1), std::invalid_argument);
}

TEST(Spawn, SceneTextRoundTrip) {
  const Scene s = spawn_scene(10, ObjectSpec::cube(25), 5);
  std::stringstream ss;
  write_scene(ss, s);
  const Scene back = read_scene(ss);
  ASSERT_EQ(back.objects.size(), s.objects.size());
  for (std::size_t k = 0; k < s.objects.size(); ++k) {
    EXPECT_NEAR(back.objects[k].x, s.objects[k].x, 1e-9);
    EXPECT_NEAR(back.objects[k].yaw, s.objects[k].yaw, 1e-9);
    EXPECT_EQ(back.objects[k].pose, s.objects[k].pose);
    EXPECT_EQ(back.objects[k].spec, s.objects[k].spec);
  }
}

TEST(Render, UprightCylinderIsAnalyticDisk) {
  const auto img = render_depth(single_upright_cylinder());
  // Flat 60 mm top with a 2 mm quarter-round rim.
  auto analytic = [](double d) {
    if (d >= 7.5) return 0.0;
    const double inset = 7.5 - d;
    if (inset >= 2.0) return 60.0;
    return 58.0 + std::sqrt(4.0 - (2.0 - inset) * (2.0 - inset));
  };
  int disk = 0;
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) {
      const double d = std::hypot(img.x_of(c), img.y_of(r));
      if (d > 70) continue;
      EXPECT_NEAR(img.at(r, c), analytic(d), 1e-4) << r << "," << c;
      disk += img.at(r, c) > 0;
    }
  // Pixel centers sit at odd multiples of 1 mm; the disk covers those within 7.5 mm.
  int expected = 0;
  for (int a = -7; a <= 7; a += 2)
    for (int b = -7; b <= 7; b += 2) expected += std::hypot(a, b) < 7.5;
  EXPECT_EQ(disk, expected);
  EXPECT_EQ(img.at(54, 54), 60.0f);
}

TEST(Render, SpeckleMarksMissingPixels) {
  RenderOptions o;
  o.speckle_probability = 0.1;
  o.speckle_seed = 4;
  const auto img = render_depth(spawn_scene(5, ObjectSpec::cylinder(), 1), o);
  const auto n = std::count(img.missing_mask().begin(), img.missing_mask().end(), 1);
  EXPECT_NEAR(static_cast<double>(n) / (110 * 110), 0.1, 0.02);
}

TEST(Attempt, EmptyFloorIsEmptyClose) {
  const Scene s = spawn_scene(0, ObjectSpec::cylinder(), 1);
  GraspConfig c;
  const auto res = attempt_grasp(s, at_height(s, {10, 10, 0.3, 1}, c), c);
  EXPECT_EQ(res.outcome.reward, 0);
  EXPECT_EQ(res.outcome.failure_cause, FailureCause::empty_close);
  EXPECT_EQ(res.scene.objects.size(), 0u);
}

TEST(Attempt, IsolatedCylinderAtCenterSucceedsForAnyYaw) {
  const Scene s = single_upright_cylinder();
  for (auto mode : {ClampForceMode::training_reduced, ClampForceMode::application}) {
    GraspConfig c;
    c.clamp_force_mode = mode;
    for (int k = 0; k < 20; ++k) {
      const auto res = attempt_grasp(s, at_height(s, {0, 0, rotation_angle(k), 1}, c), c);
      EXPECT_EQ(res.outcome.reward, 1) << k;
      EXPECT_EQ(res.outcome.failure_cause, FailureCause::none);
      EXPECT_EQ(res.outcome.grasped_object, 0);
      EXPECT_TRUE(res.scene.objects.empty());
    }
  }
}

TEST(Attempt, JawNarrowerThanObjectFails) {
  Scene s;
  s.objects.push_back(PlacedObject{ObjectSpec::cube(40), 0, 0, 0, RestingPose::upright});
  GraspConfig c;
  const auto res = attempt_grasp(s, at_height(s, {0, 0, 0, 0}, c), c);  // 30 mm jaws, 40 mm cube
  EXPECT_EQ(res.outcome.reward, 0);
  EXPECT_NE(res.outcome.failure_cause, FailureCause::none);
}

TEST(Attempt, FingerInsideWallIsBinCollision) {
  const Scene s = single_upright_cylinder(70, 0);
  GraspConfig c;
  // Closing axis along x with 70 mm jaws puts one finger at x = 105, inside the wall.
  const auto res = attempt_grasp(s, at_height(s, {70, 0, 0, 2}, c), c);
  EXPECT_EQ(res.outcome.reward, 0);
  EXPECT_EQ(res.outcome.failure_cause, FailureCause::bin_collision);
  // Turned a quarter, the fingers stay clear of the wall.
  const auto ok = attempt_grasp(s, at_height(s, {70, 0, std::numbers::pi / 2, 2}, c), c);
  EXPECT_EQ(ok.outcome.reward, 1);
}

TEST(Attempt, RewardIffNoFailureCauseAndObjectCount) {
  const Scene s = spawn_scene(10, ObjectSpec::cylinder(), 21);
  GraspConfig c;
  const auto depth = render_depth(s);
  Rng rng(3);
  for (int t = 0; t < 2000; ++t) {
    const auto g = GraspIndex::from_flat(static_cast<int>(uniform_below(rng, kActionCount)));
    const auto res = attempt_grasp(s, with_height(depth, index_to_pose(g), c), c);
    EXPECT_EQ(res.outcome.reward == 1, res.outcome.failure_cause == FailureCause::none);
    EXPECT_EQ(res.scene.objects.size(), s.objects.size() - res.outcome.reward);
  }
}

TEST(Attempt, ReplayIsBitExact) {
  const Scene s = spawn_scene(10, ObjectSpec::cylinder(), 22);
  GraspConfig c;
  c.p_flip = 0.5;
  c.displace_on_failure = true;
  const auto pose = with_height(render_depth(s), index_to_pose({3, 12, 17, 1}), c);
  const auto a = attempt_grasp(s, pose, c), b = attempt_grasp(s, pose, c);
  EXPECT_EQ(a.outcome.reward, b.outcome.reward);
  EXPECT_EQ(a.scene, b.scene);
}

TEST(Attempt, FlipProbabilityDowngradesSuccesses) {
  const Scene base = single_upright_cylinder();
  GraspConfig c;
  c.p_flip = 0.25;
  int successes = 0;
  const int n = 4000;
  for (int t = 0; t < n; ++t) {
    Scene s = base;
    s.rng_seed = static_cast<std::uint64_t>(t);
    successes += attempt_grasp(s, at_height(s, {0, 0, 0, 1}, c), c).outcome.reward;
  }
  EXPECT_NEAR(successes / static_cast<double>(n), 0.75, 0.03);
}

TEST(Feasible, EmptySceneHasNoFeasibleCells) {
  EXPECT_TRUE(enumerate_feasible(spawn_scene(0, ObjectSpec::cylinder(), 1), GraspConfig{}).empty());
}

TEST(Feasible, MatchesAttemptGraspOnGridCenters) {
  const Scene s = single_upright_cylinder(8, -12);
  GraspConfig c;
  const auto feasible = enumerate_feasible(s, c);
  ASSERT_FALSE(feasible.empty());
  EXPECT_TRUE(std::is_sorted(feasible.begin(), feasible.end(),
                             [](const GraspIndex& a, const GraspIndex& b) { return a.flat() < b.flat(); }));
  const auto depth = render_depth(s);
  for (const auto& g : feasible)
    EXPECT_EQ(attempt_grasp(s, with_height(depth, index_to_pose(g), c), c).outcome.reward, 1);
  // Cells outside the set fail.
  std::vector<bool> in(kActionCount, false);
  for (const auto& g : feasible) in[g.flat()] = true;
  Rng rng(9);
  for (int t = 0; t < 3000; ++t) {
    const int f = static_cast<int>(uniform_below(rng, kActionCount));
    if (in[f]) continue;
    EXPECT_EQ(attempt_grasp(s, with_height(depth, index_to_pose(GraspIndex::from_flat(f)), c), c).outcome.reward, 0);
  }
}

TEST(Feasible, ReducedForceSetIsSubsetOfApplicationSet) {
  for (std::uint64_t seed : {31, 32, 33}) {
    const Scene s = spawn_scene(10, ObjectSpec::cylinder(), seed);
    GraspConfig reduced, full;
    full.clamp_force_mode = ClampForceMode::application;
    const auto a = enumerate_feasible(s, reduced);
    const auto b = enumerate_feasible(s, full);
    std::vector<int> fa, fb;
    for (const auto& g : a) fa.push_back(g.flat());
    for (const auto& g : b) fb.push_back(g.flat());
    EXPECT_TRUE(std::includes(fb.begin(), fb.end(), fa.begin(), fa.end()));
    EXPECT_LT(fa.size(), fb.size());
  }
}

TEST(Feasible, RandomSuccessRateNearThreePercent) {
  double sum = 0;
  const int scenes = 200;
  for (int t = 0; t < scenes; ++t) {
    const Scene s = spawn_scene(10, ObjectSpec::cylinder(), 1000 + t);
    sum += enumerate_feasible(s, GraspConfig{}).size() / static_cast<double>(kActionCount);
  }
  const double mean = sum / scenes;
  EXPECT_GE(mean, 0.01);
  EXPECT_LE(mean, 0.08);
}
