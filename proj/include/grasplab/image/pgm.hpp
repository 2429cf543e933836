#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

namespace grasplab::image {

// Binary 8-bit portable graymap (P5).
void write_pgm(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> pixels);

// Linear map of [lo, hi] to 0..255, clamped.
void write_pgm_scaled(const std::filesystem::path& path, int width, int height, std::span<const float> values,
                      float lo, float hi);

}  // namespace grasplab::image
