#include "grasplab/image/heightmap_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace grasplab::image {

namespace {

std::uint16_t to_code(float depth, double depth_scale) {
  const double q = std::round(static_cast<double>(depth) / depth_scale);
  if (!(q >= 0.0) || q >= kMissingSentinel)
    throw HeightmapFormatError("depth " + std::to_string(depth) + " mm is not representable");
  return static_cast<std::uint16_t>(q);
}

}  // namespace

float quantize_depth(float depth, double depth_scale) {
  return static_cast<float>(to_code(depth, depth_scale) * depth_scale);
}

std::vector<std::uint8_t> encode_heightmap(const DepthImage& img, std::uint64_t seed, double depth_scale) {
  if (!(depth_scale > 0)) throw HeightmapFormatError("depth scale must be positive");
  std::ostringstream head;
  head.precision(17);
  head << kHeightmapMagic << ' ' << img.width() << ' ' << img.height() << ' ' << img.pitch() << ' ' << depth_scale
       << ' ' << kMissingSentinel << ' ' << seed << ' ' << kHeightmapVersion << '\n';
  const std::string h = head.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(h.size() + 2 * img.data().size());
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) {
      const std::uint16_t v = img.missing(r, c) ? kMissingSentinel : to_code(img.at(r, c), depth_scale);
      out.push_back(static_cast<std::uint8_t>(v & 0xFF));
      out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
  return out;
}

DepthImage decode_heightmap(const std::vector<std::uint8_t>& bytes, std::uint64_t* seed) {
  const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t('\n'));
  if (nl == bytes.end()) throw HeightmapFormatError("heightmap header not terminated");
  std::istringstream head(std::string(bytes.begin(), nl));
  std::string magic;
  int width = 0, height = 0;
  double pitch = 0, depth_scale = 0;
  unsigned sentinel = 0, version = 0;
  std::uint64_t file_seed = 0;
  if (!(head >> magic >> width >> height >> pitch >> depth_scale >> sentinel >> file_seed >> version))
    throw HeightmapFormatError("malformed heightmap header");
  std::string extra;
  if (head >> extra) throw HeightmapFormatError("malformed heightmap header");
  if (magic != kHeightmapMagic) throw HeightmapFormatError("bad heightmap magic '" + magic + "'");
  if (version != kHeightmapVersion) throw HeightmapFormatError("unsupported heightmap version");
  if (sentinel != kMissingSentinel) throw HeightmapFormatError("unexpected missing-data sentinel");
  if (width <= 0 || height <= 0 || !(pitch > 0) || !(depth_scale > 0))
    throw HeightmapFormatError("invalid heightmap dimensions");
  const std::size_t offset = static_cast<std::size_t>(nl - bytes.begin()) + 1;
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() != offset + 2 * count) throw HeightmapFormatError("heightmap payload has the wrong size");

  DepthImage img(width, height, pitch);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const std::size_t k = offset + 2 * (static_cast<std::size_t>(r) * width + c);
      const std::uint16_t v = static_cast<std::uint16_t>(bytes[k] | (bytes[k + 1] << 8));
      if (v == kMissingSentinel) {
        img.set_missing(r, c, true);
        img.at(r, c) = 0.0f;
      } else {
        img.at(r, c) = static_cast<float>(v * depth_scale);
      }
    }
  if (seed) *seed = file_seed;
  return img;
}

void save_heightmap(const DepthImage& img, const std::filesystem::path& path, std::uint64_t seed,
                    double depth_scale) {
  const auto bytes = encode_heightmap(img, seed, depth_scale);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

DepthImage load_heightmap(const std::filesystem::path& path, std::uint64_t* seed) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_heightmap(bytes, seed);
}

}  // namespace grasplab::image
