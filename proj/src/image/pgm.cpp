#include "grasplab/image/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace grasplab::image {

void write_pgm(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height) throw std::invalid_argument("pgm size mismatch");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "P5\n" << width << " " << height << "\n255\n";
  f.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_pgm_scaled(const std::filesystem::path& path, int width, int height, std::span<const float> values,
                      float lo, float hi) {
  std::vector<std::uint8_t> px(values.size());
  const float span = hi > lo ? hi - lo : 1.0f;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float t = std::clamp((values[i] - lo) / span, 0.0f, 1.0f);
    px[i] = static_cast<std::uint8_t>(std::lround(255.0f * t));
  }
  write_pgm(path, width, height, px);
}

}  // namespace grasplab::image
