#include "grasplab/image/depth_image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace grasplab::image {

DepthImage::DepthImage(int width, int height, double pitch_mm, float fill)
    : DepthImage(width, height, pitch_mm, -0.5 * width * pitch_mm, -0.5 * height * pitch_mm, fill) {}

DepthImage::DepthImage(int width, int height, double pitch_mm, double origin_x, double origin_y, float fill)
    : width_(width), height_(height), pitch_(pitch_mm), origin_x_(origin_x), origin_y_(origin_y) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("depth image needs positive size");
  if (!(pitch_mm > 0.0)) throw std::invalid_argument("depth image pitch must be positive");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
  missing_.assign(data_.size(), 0);
}

bool DepthImage::contains(double x, double y) const {
  const double c = (x - origin_x_) / pitch_;
  const double r = (y - origin_y_) / pitch_;
  return c >= 0.0 && c <= width_ && r >= 0.0 && r <= height_;
}

float reference_level(const DepthImage& img) {
  float lo = std::numeric_limits<float>::infinity();
  const auto& d = img.data();
  const auto& m = img.missing_mask();
  for (std::size_t k = 0; k < d.size(); ++k)
    if (!m[k]) lo = std::min(lo, d[k]);
  return std::isinf(lo) ? 0.0f : lo;
}

DepthImage filled(const DepthImage& img) {
  DepthImage out = img;
  const float ref = reference_level(img);
  auto& d = out.data();
  const auto& m = out.missing_mask();
  for (std::size_t k = 0; k < d.size(); ++k)
    if (m[k]) d[k] = ref;
  return out;
}

}  // namespace grasplab::image
