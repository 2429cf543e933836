#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "grasplab/core/grid.hpp"
#include "grasplab/core/random.hpp"
#include "grasplab/image/depth_image.hpp"
#include "grasplab/image/heightmap_io.hpp"
#include "grasplab/image/pgm.hpp"
#include "grasplab/image/transform.hpp"

using namespace grasplab;
using namespace grasplab::image;

namespace {

// Asymmetric pattern with distinct values everywhere.
DepthImage pattern(int n = kOverviewSize) {
  DepthImage img(n, n, kPixelPitchMm);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) img.at(r, c) = static_cast<float>((r * 7 + c * 13) % 97) + 0.25f * (r % 3);
  return img;
}

// Smooth bump of height amp and width sigma (pixels) at the image center.
DepthImage bump(double amp, double sigma) {
  DepthImage img(kOverviewSize, kOverviewSize, kPixelPitchMm);
  const double h = 0.5 * kOverviewSize - 0.5;
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) {
      const double d2 = (r - h) * (r - h) + (c - h) * (c - h);
      img.at(r, c) = static_cast<float>(amp * std::exp(-d2 / (2 * sigma * sigma)));
    }
  return img;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("grasplab_image_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST(DepthImageTest, FrameIsCenteredOnOrigin) {
  DepthImage img(110, 110, 2.0);
  EXPECT_DOUBLE_EQ(img.origin_x(), -110.0);
  EXPECT_DOUBLE_EQ(img.x_of(0), -109.0);
  EXPECT_DOUBLE_EQ(img.col_of(img.x_of(37)), 37.0);
  EXPECT_TRUE(img.contains(0, 0));
  EXPECT_FALSE(img.contains(111, 0));
}

TEST(DepthImageTest, ReferenceIgnoresMissingPixels) {
  DepthImage img(4, 4, 1.0, 5.0f);
  img.at(1, 1) = 2.0f;
  img.set_missing(1, 1, true);
  img.at(2, 2) = 3.0f;
  EXPECT_EQ(reference_level(img), 3.0f);
  EXPECT_EQ(filled(img).at(1, 1), 3.0f);
  DepthImage all(2, 2, 1.0);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) all.set_missing(r, c, true);
  EXPECT_EQ(reference_level(all), 0.0f);
}

TEST(Normalize, ClampsAtPlusMinusOne) {
  EXPECT_FLOAT_EQ(normalize_depth(50.0f, 0.0f), 0.5f);
  EXPECT_FLOAT_EQ(normalize_depth(250.0f, 0.0f), 1.0f);
  EXPECT_FLOAT_EQ(normalize_depth(-250.0f, 0.0f), -1.0f);
}

TEST(Window, ZeroYawAtCellCenterIsPureCrop) {
  const auto img = pattern();
  const float ref = reference_level(img);
  for (int i : {0, 7, 39})
    for (int j : {0, 22, 39}) {
      const auto pose = index_to_pose({0, i, j, 0});
      const auto w = extract_window(img, pose.x, pose.y, 0.0);
      for (int r = 0; r < kWindowSize; ++r)
        for (int c = 0; c < kWindowSize; ++c)
          ASSERT_EQ(w.at(r, c), normalize_depth(img.at(2 * j + r, 2 * i + c), ref));
    }
}

TEST(Window, QuarterTurnIsArrayRotation) {
  const auto img = pattern();
  const auto w0 = extract_window(img, 2.0, -6.0, 0.0);
  const auto w90 = extract_window(img, 2.0, -6.0, std::numbers::pi / 2);
  for (int r = 0; r < kWindowSize; ++r)
    for (int c = 0; c < kWindowSize; ++c) ASSERT_EQ(w90.at(r, c), w0.at(c, kWindowSize - 1 - r));
}

TEST(Window, LeavingTheImageThrows) {
  const auto img = pattern();
  EXPECT_THROW(extract_window(img, 100.0, 0.0, 0.0), std::out_of_range);
  EXPECT_THROW(extract_window(img, 500.0, 0.0, 0.0), std::out_of_range);
}

TEST(Window, InvariantUnderConstantDepthOffset) {
  auto img = pattern();
  auto shifted = img;
  for (auto& v : shifted.data()) v += 17.0f;
  const auto a = extract_window(img, -10, 14, 0.7);
  const auto b = extract_window(shifted, -10, 14, 0.7);
  for (int k = 0; k < kWindowPixels; ++k) ASSERT_NEAR(a.values[k], b.values[k], 1e-5);
}

TEST(Rotate, StackEndpointsAreLossless) {
  const auto img = pattern();
  const auto stack = rotate_stack(img);
  ASSERT_EQ(stack.size(), 20u);
  EXPECT_EQ(stack[0], img);
  const int n = img.width();
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) ASSERT_EQ(stack[10].at(r, c), img.at(c, n - 1 - r));
}

TEST(Rotate, RoundTripWithinTwoInterpolationSteps) {
  const double amp = 40.0, sigma = 12.0;
  const auto img = bump(amp, sigma);
  // Bilinear error per step is at most (|f_xx| + |f_yy|) / 8 <= amp / (4 sigma^2) on a unit grid.
  const double bound = 2 * amp / (4 * sigma * sigma) + 1e-4;
  const double h = 0.5 * kOverviewSize - 0.5;
  for (double a : {0.1, 0.9, 2.3}) {
    const auto back = rotate_about_center(rotate_about_center(img, a), -a);
    double worst = 0;
    for (int r = 0; r < img.height(); ++r)
      for (int c = 0; c < img.width(); ++c)
        if ((r - h) * (r - h) + (c - h) * (c - h) < 40.0 * 40.0)
          worst = std::max(worst, static_cast<double>(std::abs(back.at(r, c) - img.at(r, c))));
    EXPECT_LE(worst, bound) << a;
  }
}

TEST(Rotate, OutsideSamplesTakeReferenceAndAreMissing) {
  auto img = pattern();
  const auto rot = rotate_about_center(img, 0.25 * std::numbers::pi);
  EXPECT_TRUE(rot.missing(0, 0));
  EXPECT_EQ(rot.at(0, 0), reference_level(img));
  EXPECT_FALSE(rot.missing(55, 55));
}

TEST(ZProbe, FloorAndCylinderTop) {
  DepthImage img(110, 110, 2.0);
  EXPECT_DOUBLE_EQ(z_from_depth(img, 0, 0), 0.0);
  for (int r = 0; r < 110; ++r)
    for (int c = 0; c < 110; ++c)
      if (std::hypot(img.x_of(c), img.y_of(r)) < 7.5) img.at(r, c) = 60.0f;
  EXPECT_DOUBLE_EQ(z_from_depth(img, 0, 0), 50.0);
  // The 4 mm probe disk reaches the rim from 10 mm away.
  EXPECT_DOUBLE_EQ(z_from_depth(img, 10, 0), 50.0);
  EXPECT_DOUBLE_EQ(z_from_depth(img, 13, 0), 0.0);
}

TEST(ZProbe, MissingNeighborhoodThrows) {
  DepthImage img(110, 110, 2.0);
  for (int r = 40; r < 70; ++r)
    for (int c = 40; c < 70; ++c) img.set_missing(r, c, true);
  EXPECT_THROW(z_from_depth(img, 0, 0), std::runtime_error);
  EXPECT_THROW(z_from_depth(img, 300, 0), std::out_of_range);
}

TEST(Pad, LargeEnoughImageUnchanged) {
  const auto img = pattern();
  EXPECT_EQ(pad_for_inference(img), img);
}

TEST(Pad, SmallImageCenteredWithMissingBorder) {
  const auto img = pattern(80);
  const auto p = pad_for_inference(img);
  ASSERT_EQ(p.width(), 110);
  ASSERT_EQ(p.height(), 110);
  EXPECT_DOUBLE_EQ(p.x_of(15), img.x_of(0));
  const float ref = reference_level(img);
  for (int r = 0; r < 110; ++r)
    for (int c = 0; c < 110; ++c) {
      const bool inside = r >= 15 && r < 95 && c >= 15 && c < 95;
      EXPECT_EQ(p.missing(r, c), !inside);
      EXPECT_EQ(p.at(r, c), inside ? img.at(r - 15, c - 15) : ref);
    }
}

TEST(Heightmap, RoundTripIsExactAfterQuantization) {
  auto img = pattern();
  img.at(3, 4) = 12.3456f;
  img.set_missing(5, 6, true);
  std::uint64_t seed = 0;
  const auto bytes = encode_heightmap(img, 99);
  const auto back = decode_heightmap(bytes, &seed);
  EXPECT_EQ(seed, 99u);
  ASSERT_EQ(back.width(), img.width());
  EXPECT_DOUBLE_EQ(back.pitch(), img.pitch());
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) {
      ASSERT_EQ(back.missing(r, c), img.missing(r, c));
      if (!img.missing(r, c)) ASSERT_EQ(back.at(r, c), quantize_depth(img.at(r, c)));
    }
  EXPECT_EQ(encode_heightmap(back, 99), bytes);
  EXPECT_NEAR(back.at(3, 4), 12.3456f, 0.5 / 256);
}

TEST(Heightmap, HeaderHasEightFields) {
  const auto bytes = encode_heightmap(DepthImage(3, 2, 2.0), 5);
  const std::string text(bytes.begin(), bytes.end());
  const std::string header = text.substr(0, text.find('\n'));
  EXPECT_EQ(header.substr(0, 5), "GLHM ");
  EXPECT_EQ(std::count(header.begin(), header.end(), ' '), 7);
  EXPECT_EQ(bytes.size(), header.size() + 1 + 3 * 2 * 2);
}

TEST(Heightmap, RejectsBadInput) {
  auto bytes = encode_heightmap(pattern(8));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_heightmap(bad), HeightmapFormatError);
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW(decode_heightmap(bad), HeightmapFormatError);
  DepthImage neg(2, 2, 1.0, -1.0f);
  EXPECT_THROW(encode_heightmap(neg), HeightmapFormatError);
  DepthImage huge(2, 2, 1.0, 1e6f);
  EXPECT_THROW(encode_heightmap(huge), HeightmapFormatError);
}

TEST(Heightmap, FileRoundTrip) {
  const auto dir = temp_dir("hm");
  const auto img = pattern(16);
  save_heightmap(img, dir / "a.hm", 3);
  std::uint64_t seed = 0;
  const auto back = load_heightmap(dir / "a.hm", &seed);
  EXPECT_EQ(seed, 3u);
  EXPECT_EQ(encode_heightmap(back, seed), encode_heightmap(img, 3));
}

TEST(Pgm, ScaledGraymapLayout) {
  const auto dir = temp_dir("pgm");
  std::vector<float> v{0.0f, 0.5f, 1.0f, 2.0f, -1.0f, 0.25f};
  write_pgm_scaled(dir / "a.pgm", 3, 2, v, 0.0f, 1.0f);
  std::ifstream f(dir / "a.pgm", std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(data.size(), header.size() + 6);
  EXPECT_EQ(data.substr(0, header.size()), header);
  const auto* px = reinterpret_cast<const unsigned char*>(data.data() + header.size());
  EXPECT_EQ(px[0], 0);
  EXPECT_EQ(px[2], 255);
  EXPECT_EQ(px[3], 255);
  EXPECT_EQ(px[4], 0);
  EXPECT_NEAR(px[1], 128, 1);
}
