#include "grasplab/sim/simulator.hpp"

#include <cmath>
#include <stdexcept>

#include "grasplab/core/random.hpp"

namespace grasplab::sim {

std::string to_string(FailureCause c) {
  switch (c) {
    case FailureCause::none: return "none";
    case FailureCause::finger_collision: return "finger_collision";
    case FailureCause::empty_close: return "empty_close";
    case FailureCause::unstable_clamp: return "unstable_clamp";
    case FailureCause::bin_collision: return "bin_collision";
  }
  return "unknown";
}

image::DepthImage render_depth(const Scene& scene, const RenderOptions& opts) {
  image::DepthImage img(opts.size_px, opts.size_px, opts.pitch_mm);
  const double hw = 0.5 * scene.bin.inner_w_mm, hh = 0.5 * scene.bin.inner_h_mm;
  const double t = scene.bin.wall_thickness_mm;
  std::vector<double> reach(scene.objects.size());
  for (std::size_t k = 0; k < scene.objects.size(); ++k) reach[k] = scene.objects[k].footprint_radius();

  for (int r = 0; r < img.height(); ++r) {
    const double y = img.y_of(r);
    for (int c = 0; c < img.width(); ++c) {
      const double x = img.x_of(c);
      float v = 0.0f;
      if (std::abs(x) < hw && std::abs(y) < hh) {
        double h = 0.0;
        for (std::size_t k = 0; k < scene.objects.size(); ++k) {
          const auto& o = scene.objects[k];
          if (std::abs(x - o.x) > reach[k] || std::abs(y - o.y) > reach[k]) continue;
          h = std::max(h, o.height_at(x, y));
        }
        v = static_cast<float>(h);
      } else if (std::abs(x) < hw + t && std::abs(y) < hh + t) {
        v = static_cast<float>(scene.bin.wall_height_mm);
      }
      img.at(r, c) = v;
    }
  }
  if (opts.speckle_probability > 0.0) {
    Rng rng(derive_seed(opts.speckle_seed, {0x59ec1eULL}));
    for (int r = 0; r < img.height(); ++r)
      for (int c = 0; c < img.width(); ++c)
        if (uniform01(rng) < opts.speckle_probability) img.set_missing(r, c, true);
  }
  return img;
}

GraspPose with_height(const image::DepthImage& depth, GraspPose pose, const GraspConfig& config) {
  pose.z = 0.0;
  if (!depth.contains(pose.x, pose.y)) return pose;
  try {
    pose.z = image::z_from_depth(depth, pose.x, pose.y, config.probe);
  } catch (const std::runtime_error&) {
    pose.z = 0.0;
  }
  return pose;
}

GraspOutcome evaluate_grasp(const Scene& scene, const GraspPose& pose, const GraspConfig& config) {
  GraspOutcome out;
  const double hw = 0.5 * scene.bin.inner_w_mm, hh = 0.5 * scene.bin.inner_h_mm;
  if (!(std::abs(pose.x) < hw && std::abs(pose.y) < hh)) {
    out.failure_cause = FailureCause::bin_collision;
    return out;
  }
  if (pose.d_index < 0 || pose.d_index >= kOpenings) throw std::out_of_range("jaw opening index");

  const double d = config.jaw_openings_mm[pose.d_index];
  const double half_t = 0.5 * config.finger_thickness_mm;
  const double half_w = 0.5 * config.finger_width_mm;
  const Vec2 p{pose.x, pose.y};
  const Vec2 u{std::cos(pose.a), std::sin(pose.a)};
  const Vec2 v{-u.y, u.x};
  const double offset = 0.5 * d + half_t;
  const Polygon finger_a = make_rect(p + u * offset, u, half_t, half_w);
  const Polygon finger_b = make_rect(p - u * offset, u, half_t, half_w);
  const double gripper_reach = std::hypot(offset + half_t, half_w);

  auto near = [&](const PlacedObject& o) {
    return std::hypot(o.x - p.x, o.y - p.y) < o.footprint_radius() + gripper_reach;
  };
  auto wall_hit = [&](double h) {
    return h < scene.bin.wall_height_mm && !(inside_aabb(finger_a, hw, hh) && inside_aabb(finger_b, hw, hh));
  };
  auto object_hit = [&](double h) {
    for (const auto& o : scene.objects) {
      if (o.top() <= h || !near(o)) continue;
      const Polygon s = o.section(h);
      if (convex_intersect(s, finger_a) || convex_intersect(s, finger_b)) return true;
    }
    return false;
  };

  double h = pose.z;
  if (wall_hit(h) || object_hit(h)) {
    h += config.approach_retract_mm;
    if (wall_hit(h)) {
      out.failure_cause = FailureCause::bin_collision;
      return out;
    }
    if (object_hit(h)) {
      out.failure_cause = FailureCause::finger_collision;
      return out;
    }
  }

  int target = -1;
  double width = 0.0;
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    const auto& o = scene.objects[k];
    if (o.top() <= h || !near(o)) continue;
    const Polygon between = clip_rect(o.section(h), p, u, 0.5 * d, half_w);
    if (between.size() < 3) continue;
    if (target >= 0) {
      out.failure_cause = FailureCause::unstable_clamp;  // two objects in the jaws
      return out;
    }
    target = static_cast<int>(k);
    double lo = 1e300, hi = -1e300;
    for (auto q : between) {
      const double s = (q - p).dot(u);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    width = hi - lo;
  }
  if (target < 0) {
    out.failure_cause = FailureCause::empty_close;
    return out;
  }
  out.grasped_object = target;
  if (width < config.min_clamp_width_mm || width >= d) {
    out.failure_cause = FailureCause::unstable_clamp;
    return out;
  }
  if (config.clamp_force_mode == ClampForceMode::training_reduced) {
    const auto& o = scene.objects[target];
    const double off_axis = std::abs((Vec2{o.x, o.y} - p).dot(v));
    if (off_axis > config.stability_fraction * o.footprint_radius()) {
      out.failure_cause = FailureCause::unstable_clamp;
      return out;
    }
  }
  out.reward = 1;
  out.failure_cause = FailureCause::none;
  return out;
}

AttemptResult attempt_grasp(const Scene& scene, const GraspPose& pose, const GraspConfig& config) {
  AttemptResult res{evaluate_grasp(scene, pose, config), scene};
  res.scene.attempts = scene.attempts + 1;
  Rng rng(derive_seed(scene.rng_seed, {0xa77e3bULL, scene.attempts}));

  if (res.outcome.reward == 1 && config.p_flip > 0.0 && uniform01(rng) < config.p_flip) {
    res.outcome.reward = 0;
    res.outcome.failure_cause = FailureCause::unstable_clamp;
  }
  if (res.outcome.reward == 1) {
    res.scene.objects.erase(res.scene.objects.begin() + res.outcome.grasped_object);
    return res;
  }
  if (config.displace_on_failure && !res.scene.objects.empty()) {
    std::size_t nearest = 0;
    double best = 1e300;
    for (std::size_t k = 0; k < res.scene.objects.size(); ++k) {
      const double dist = std::hypot(res.scene.objects[k].x - pose.x, res.scene.objects[k].y - pose.y);
      if (dist < best) best = dist, nearest = k;
    }
    PlacedObject moved = res.scene.objects[nearest];
    moved.x += (2.0 * uniform01(rng) - 1.0) * config.displacement_mm;
    moved.y += (2.0 * uniform01(rng) - 1.0) * config.displacement_mm;
    const Polygon fp = moved.footprint();
    bool ok = inside_aabb(fp, 0.5 * scene.bin.inner_w_mm, 0.5 * scene.bin.inner_h_mm);
    for (std::size_t k = 0; ok && k < res.scene.objects.size(); ++k)
      if (k != nearest && convex_intersect(fp, res.scene.objects[k].footprint())) ok = false;
    if (ok) res.scene.objects[nearest] = moved;
  }
  return res;
}

std::vector<GraspIndex> enumerate_feasible(const Scene& scene, const GraspConfig& config) {
  if (scene.objects.empty()) return {};
  const image::DepthImage depth = render_depth(scene);
  std::vector<std::vector<GraspIndex>> per_rotation(kRotations);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < kRotations; ++k) {
    for (int i = 0; i < kGridCells; ++i)
      for (int j = 0; j < kGridCells; ++j)
        for (int kd = 0; kd < kOpenings; ++kd) {
          const GraspIndex idx{k, i, j, kd};
          const GraspPose pose = with_height(depth, index_to_pose(idx), config);
          if (evaluate_grasp(scene, pose, config).reward == 1) per_rotation[k].push_back(idx);
        }
  }
  std::vector<GraspIndex> out;
  for (auto& v : per_rotation) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace grasplab::sim
