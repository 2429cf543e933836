#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grasplab/core/grid.hpp"
#include "grasplab/core/random.hpp"
#include "grasplab/image/depth_image.hpp"
#include "grasplab/image/transform.hpp"
#include "grasplab/net/layers.hpp"

namespace grasplab::policy {

// Success probability for every cell of the discrete grasp space, indexed by GraspIndex::flat().
struct ValueMap {
  std::vector<float> values = std::vector<float>(kActionCount, 0.0f);
  std::uint64_t snapshot_id = 0;
  std::uint64_t scene_id = 0;

  float at(const GraspIndex& g) const { return values[g.flat()]; }
  float& at(const GraspIndex& g) { return values[g.flat()]; }
};

// Pre-rotated overview images sharing one normalization reference.
struct Observation {
  image::DepthImage image;
  float reference = 0.0f;
  std::vector<image::DepthImage> rotated;  // one per yaw bin
};

Observation observe(const image::DepthImage& depth);

// Network input for cell (i, j) of a rotated image: rows 2j..2j+31, cols 2i..2i+31.
image::WindowImage cell_window(const Observation& obs, const GraspIndex& g);

ValueMap evaluate(const net::NetworkParams& params, const Observation& obs);
inline ValueMap evaluate(const net::NetworkParams& params, const image::DepthImage& depth) {
  return evaluate(params, observe(depth));
}

enum class Method { random, maximum, probabilistic, uncertain };

struct SelectionMethod {
  Method method = Method::random;
  int n = 1;  // only for maximum

  friend bool operator==(const SelectionMethod&, const SelectionMethod&) = default;
};

// Tokens: random, maxN:<N>, prob, uncertain.
std::string to_token(const SelectionMethod& m);
SelectionMethod parse_method(const std::string& token);

// Cells a selector must skip (already failed on the current scene). Sorted or not.
using Exclusion = std::span<const int>;

GraspIndex select_random(Rng& rng);
// Uniform among the N largest entries; ties ranked by lower flat index.
GraspIndex select_maximum(const ValueMap& map, int n, Rng& rng, Exclusion exclude = {});
// P(cell) = psi / sum(psi); falls back to select_random when the sum is zero.
GraspIndex select_probabilistic(const ValueMap& map, Rng& rng, Exclusion exclude = {});
// argmin |0.5 - psi|, lowest flat index on ties.
GraspIndex select_uncertain(const ValueMap& map, Exclusion exclude = {});

GraspIndex select(const SelectionMethod& m, const ValueMap& map, Rng& rng, Exclusion exclude = {});

// Greedy first choice and its fallback from the remaining top five.
struct GraspPlan {
  GraspIndex first;
  GraspIndex retry;
};
GraspPlan exploit_with_retry(const ValueMap& map, Rng& rng, Exclusion exclude = {});

// One 8-bit graymap per (rotation, opening) slice: <dir>/<prefix>_r<k>_d<d>.pgm
void dump_value_map(const ValueMap& map, const std::filesystem::path& dir, const std::string& prefix);
// Plain-text slice: 40 rows of 40 values.
std::string format_slice(const ValueMap& map, int k_rot, int k_d);

}  // namespace grasplab::policy
