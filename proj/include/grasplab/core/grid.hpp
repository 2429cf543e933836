#pragma once

#include <array>
#include <cstdint>
#include <numbers>

namespace grasplab {

// Discrete planar grasp space: 20 yaw bins x 40 x 40 positions x 3 jaw openings.
inline constexpr int kRotations = 20;
inline constexpr int kGridCells = 40;
inline constexpr int kOpenings = 3;
inline constexpr int kActionCount = kRotations * kGridCells * kGridCells * kOpenings;  // 96000

inline constexpr double kGridPitchMm = 4.0;
// Task frame origin is the bin center; cell i sits at kFirstCellMm + i * pitch.
inline constexpr double kFirstCellMm = -78.0;

inline constexpr double rotation_angle(int k_rot) { return k_rot * std::numbers::pi / kRotations; }

struct GraspIndex {
  int k_rot = 0;  // yaw bin, a = k_rot * pi / 20
  int i = 0;      // x cell (image column)
  int j = 0;      // y cell (image row)
  int k_d = 0;    // jaw opening

  friend bool operator==(const GraspIndex&, const GraspIndex&) = default;

  constexpr int flat() const { return ((k_rot * kGridCells + i) * kGridCells + j) * kOpenings + k_d; }

  static constexpr GraspIndex from_flat(int flat) {
    GraspIndex g;
    g.k_d = flat % kOpenings;
    flat /= kOpenings;
    g.j = flat % kGridCells;
    flat /= kGridCells;
    g.i = flat % kGridCells;
    g.k_rot = flat / kGridCells;
    return g;
  }

  constexpr bool valid() const {
    return k_rot >= 0 && k_rot < kRotations && i >= 0 && i < kGridCells && j >= 0 && j < kGridCells &&
           k_d >= 0 && k_d < kOpenings;
  }
};

struct GraspIndexHash {
  std::size_t operator()(const GraspIndex& g) const noexcept { return static_cast<std::size_t>(g.flat()); }
};

// Continuous planar grasp. z is never chosen by the policy; it is read from the depth image.
struct GraspPose {
  double x = 0.0;  // mm, task frame
  double y = 0.0;
  double a = 0.0;  // yaw of the closing axis, [0, pi)
  int d_index = 0;
  double z = 0.0;  // mm above the bin floor
};

double normalize_angle(double a);

// Cell-center pose for an index (z left at 0). Grid coordinates are rotated back through a_k.
GraspPose index_to_pose(const GraspIndex& idx);

// Nearest-cell quantization. Throws std::out_of_range when the pose falls outside the grid.
GraspIndex pose_to_index(const GraspPose& pose);

}  // namespace grasplab
