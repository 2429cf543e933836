#pragma once

#include <cstdint>
#include <vector>

namespace grasplab::image {

// Orthographic top-down heightmap. Row index follows task-frame y, column index task-frame x.
class DepthImage {
 public:
  DepthImage() = default;
  // Image of size width x height centered on the task-frame origin.
  DepthImage(int width, int height, double pitch_mm, float fill = 0.0f);
  DepthImage(int width, int height, double pitch_mm, double origin_x, double origin_y, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  double pitch() const { return pitch_; }
  // Task-frame coordinates of the outer corner of pixel (0, 0).
  double origin_x() const { return origin_x_; }
  double origin_y() const { return origin_y_; }

  float at(int row, int col) const { return data_[index(row, col)]; }
  float& at(int row, int col) { return data_[index(row, col)]; }
  bool missing(int row, int col) const { return missing_[index(row, col)] != 0; }
  void set_missing(int row, int col, bool m) { missing_[index(row, col)] = m ? 1 : 0; }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }
  const std::vector<std::uint8_t>& missing_mask() const { return missing_; }
  std::vector<std::uint8_t>& missing_mask() { return missing_; }

  // Continuous pixel coordinates (pixel centers at integers) of a task-frame point.
  double col_of(double x) const { return (x - origin_x_) / pitch_ - 0.5; }
  double row_of(double y) const { return (y - origin_y_) / pitch_ - 0.5; }
  double x_of(double col) const { return origin_x_ + (col + 0.5) * pitch_; }
  double y_of(double row) const { return origin_y_ + (row + 0.5) * pitch_; }

  bool contains(double x, double y) const;

  friend bool operator==(const DepthImage&, const DepthImage&) = default;

 private:
  std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * width_ + col; }

  int width_ = 0;
  int height_ = 0;
  double pitch_ = 1.0;
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  std::vector<float> data_;
  std::vector<std::uint8_t> missing_;
};

// Minimum valid depth; the image-level reference used for normalization and fill. 0 if all missing.
float reference_level(const DepthImage& img);

// Copy with missing pixels replaced by the reference level (mask preserved).
DepthImage filled(const DepthImage& img);

}  // namespace grasplab::image
