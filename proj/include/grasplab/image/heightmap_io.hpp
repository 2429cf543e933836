#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "grasplab/image/depth_image.hpp"

namespace grasplab::image {

inline constexpr const char* kHeightmapMagic = "GLHM";
inline constexpr std::uint32_t kHeightmapVersion = 1;
inline constexpr std::uint16_t kMissingSentinel = 0xFFFF;
// Depth quantum: 1/256 mm keeps 0..255.99 mm representable and dequantizes exactly in float.
inline constexpr double kDefaultDepthScale = 1.0 / 256.0;

class HeightmapFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text header "GLHM <width> <height> <pitch_mm> <depth_scale> <sentinel> <seed> <version>\n"
// followed by width * height little-endian uint16 samples, row-major. Values are quantized
// to depth_scale; depths outside [0, 65534 * depth_scale] are rejected. The decoded image is
// centered on the task-frame origin.
std::vector<std::uint8_t> encode_heightmap(const DepthImage& img, std::uint64_t seed = 0,
                                           double depth_scale = kDefaultDepthScale);
DepthImage decode_heightmap(const std::vector<std::uint8_t>& bytes, std::uint64_t* seed = nullptr);

void save_heightmap(const DepthImage& img, const std::filesystem::path& path, std::uint64_t seed = 0,
                    double depth_scale = kDefaultDepthScale);
DepthImage load_heightmap(const std::filesystem::path& path, std::uint64_t* seed = nullptr);

// Depth as it survives a save/load round trip.
float quantize_depth(float depth, double depth_scale = kDefaultDepthScale);

}  // namespace grasplab::image
