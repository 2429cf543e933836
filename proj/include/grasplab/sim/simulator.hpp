#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "grasplab/core/grid.hpp"
#include "grasplab/image/depth_image.hpp"
#include "grasplab/image/transform.hpp"
#include "grasplab/sim/scene.hpp"

namespace grasplab::sim {

enum class ClampForceMode { training_reduced, application };

struct GraspConfig {
  ClampForceMode clamp_force_mode = ClampForceMode::training_reduced;
  double min_clamp_width_mm = 5.0;
  double approach_retract_mm = 5.0;
  double finger_width_mm = 10.0;     // extent across the closing axis
  double finger_thickness_mm = 5.0;  // extent along the closing axis
  std::array<double, kOpenings> jaw_openings_mm{30.0, 50.0, 70.0};
  // Reduced clamp force: the closing line must pass this close to the centroid,
  // as a fraction of the footprint radius.
  double stability_fraction = 0.25;
  // Probability that a geometrically successful clamp is reported as a failure.
  double p_flip = 0.0;
  bool displace_on_failure = false;
  double displacement_mm = 3.0;
  image::ZProbe probe;
};

enum class FailureCause { none, finger_collision, empty_close, unstable_clamp, bin_collision };
std::string to_string(FailureCause c);

struct GraspOutcome {
  int reward = 0;
  FailureCause failure_cause = FailureCause::empty_close;
  int grasped_object = -1;  // index into the pre-attempt scene, -1 if none
};

struct AttemptResult {
  GraspOutcome outcome;
  Scene scene;
};

struct RenderOptions {
  int size_px = image::kOverviewSize;
  double pitch_mm = image::kPixelPitchMm;
  // Fraction of pixels dropped as missing depth.
  double speckle_probability = 0.0;
  std::uint64_t speckle_seed = 0;
};

image::DepthImage render_depth(const Scene& scene, const RenderOptions& opts = {});

// Fills pose.z from the depth image. Poses outside the image get z = 0.
GraspPose with_height(const image::DepthImage& depth, GraspPose pose, const GraspConfig& config);

// Deterministic clamp physics only (no flip noise, no scene change).
GraspOutcome evaluate_grasp(const Scene& scene, const GraspPose& pose, const GraspConfig& config);

// One single-shot grasp: open to d, descend to z (retracting once on collision), close, lift.
AttemptResult attempt_grasp(const Scene& scene, const GraspPose& pose, const GraspConfig& config);

// All reward-1 cells of the discrete grasp space, by brute force, sorted by flat index.
std::vector<GraspIndex> enumerate_feasible(const Scene& scene, const GraspConfig& config);

}  // namespace grasplab::sim
