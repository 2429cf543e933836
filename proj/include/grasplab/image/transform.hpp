#pragma once

#include <array>
#include <vector>

#include "grasplab/image/depth_image.hpp"

namespace grasplab::image {

inline constexpr int kWindowSize = 32;
inline constexpr int kWindowPixels = kWindowSize * kWindowSize;
inline constexpr int kOverviewSize = 110;
inline constexpr double kPixelPitchMm = 2.0;
// Depth offsets beyond this many mm from the reference saturate the network input.
inline constexpr double kNormalizationRangeMm = 100.0;

// 32x32 normalized network input around a grasp pose.
struct WindowImage {
  std::array<float, kWindowPixels> values{};
  double x = 0.0;
  double y = 0.0;
  double a = 0.0;

  float at(int row, int col) const { return values[row * kWindowSize + col]; }
};

inline float normalize_depth(float depth, float reference) {
  double v = (static_cast<double>(depth) - reference) / kNormalizationRangeMm;
  if (v > 1.0) v = 1.0;
  if (v < -1.0) v = -1.0;
  return static_cast<float>(v);
}

// Normalized copy of a whole image: missing pixels take the reference level, then
// (depth - reference) / 100 mm clamped to [-1, 1]. Row-major, width * height floats.
std::vector<float> normalized_pixels(const DepthImage& img, float reference);

// Window centered at (x, y) with its column axis along yaw a. Samples the image bilinearly
// (exact copies at quarter turns). Throws std::out_of_range when a sample point leaves the image.
WindowImage extract_window(const DepthImage& img, double x, double y, double a);

// Raw (unnormalized) bilinear sample of the filled image at continuous pixel coordinates.
float sample_bilinear(const DepthImage& filled_img, double row, double col);

// Image rotated by angle about its center: output pixel p samples the input at Rot(angle) * p.
// Out-of-image samples take the reference level and are flagged missing.
DepthImage rotate_about_center(const DepthImage& img, double angle);

// The 20 pre-rotated inputs a_k = k * pi / 20, k = 0..19.
std::vector<DepthImage> rotate_stack(const DepthImage& img);

struct ZProbe {
  double radius_mm = 4.0;
  double descent_offset_mm = 10.0;
};

// Grasp height: highest valid depth within the probe disk, minus the descent offset, floored at 0.
// Throws std::out_of_range outside the image, std::runtime_error if the disk has no valid pixel.
double z_from_depth(const DepthImage& img, double x, double y, const ZProbe& probe = {});

// Pads (centered) with the reference level so the image is at least target x target.
// Padded pixels are flagged missing. Larger images are returned unchanged.
DepthImage pad_for_inference(const DepthImage& img, int target = kOverviewSize);

}  // namespace grasplab::image
