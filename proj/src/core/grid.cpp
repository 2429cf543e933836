#include "grasplab/core/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace grasplab {

double normalize_angle(double a) {
  constexpr double pi = std::numbers::pi;
  double r = std::fmod(a, pi);
  if (r < 0.0) r += pi;
  if (r >= pi) r -= pi;
  return r;
}

GraspPose index_to_pose(const GraspIndex& idx) {
  if (!idx.valid()) throw std::out_of_range("grasp index out of range");
  const double gx = kFirstCellMm + kGridPitchMm * idx.i;
  const double gy = kFirstCellMm + kGridPitchMm * idx.j;
  const double a = rotation_angle(idx.k_rot);
  GraspPose p;
  if (idx.k_rot == 0) {
    p.x = gx;
    p.y = gy;
  } else if (2 * idx.k_rot == kRotations) {
    p.x = -gy;
    p.y = gx;
  } else {
    const double c = std::cos(a), s = std::sin(a);
    p.x = c * gx - s * gy;
    p.y = s * gx + c * gy;
  }
  p.a = a;
  p.d_index = idx.k_d;
  return p;
}

GraspIndex pose_to_index(const GraspPose& pose) {
  const double step = std::numbers::pi / kRotations;
  double a = normalize_angle(pose.a);
  long k = std::lround(a / step);
  bool flipped = false;
  if (k == kRotations) {  // a close to pi is the same gripper as a close to 0
    k = 0;
    flipped = true;
  }
  const double ak = k * step;
  const double c = std::cos(ak), s = std::sin(ak);
  double gx = c * pose.x + s * pose.y;
  double gy = -s * pose.x + c * pose.y;
  if (flipped) {
    gx = -gx;
    gy = -gy;
  }
  const long i = std::lround((gx - kFirstCellMm) / kGridPitchMm);
  const long j = std::lround((gy - kFirstCellMm) / kGridPitchMm);
  GraspIndex idx{static_cast<int>(k), static_cast<int>(i), static_cast<int>(j), pose.d_index};
  if (!idx.valid())
    throw std::out_of_range("pose outside grasp grid (" + std::to_string(pose.x) + ", " + std::to_string(pose.y) + ")");
  return idx;
}

}  // namespace grasplab
