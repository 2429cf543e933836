#include "grasplab/policy/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "grasplab/image/pgm.hpp"
#include "grasplab/net/network.hpp"

namespace grasplab::policy {

namespace {

std::vector<std::uint8_t> exclusion_mask(Exclusion exclude) {
  std::vector<std::uint8_t> mask;
  if (exclude.empty()) return mask;
  mask.assign(kActionCount, 0);
  for (int f : exclude)
    if (f >= 0 && f < kActionCount) mask[f] = 1;
  return mask;
}

inline bool skipped(const std::vector<std::uint8_t>& mask, int f) { return !mask.empty() && mask[f]; }

}  // namespace

Observation observe(const image::DepthImage& depth) {
  Observation obs;
  obs.image = image::pad_for_inference(depth);
  obs.reference = image::reference_level(obs.image);
  obs.rotated = image::rotate_stack(obs.image);
  return obs;
}

image::WindowImage cell_window(const Observation& obs, const GraspIndex& g) {
  if (!g.valid()) throw std::out_of_range("grasp index out of range");
  const auto& img = obs.rotated[g.k_rot];
  const int r0 = 2 * g.j + (img.height() - image::kOverviewSize) / 2;
  const int c0 = 2 * g.i + (img.width() - image::kOverviewSize) / 2;
  image::WindowImage w;
  const auto pose = index_to_pose(g);
  w.x = pose.x;
  w.y = pose.y;
  w.a = pose.a;
  for (int r = 0; r < image::kWindowSize; ++r)
    for (int c = 0; c < image::kWindowSize; ++c) {
      const float v = img.missing(r0 + r, c0 + c) ? obs.reference : img.at(r0 + r, c0 + c);
      w.values[r * image::kWindowSize + c] = image::normalize_depth(v, obs.reference);
    }
  return w;
}

ValueMap evaluate(const net::NetworkParams& params, const Observation& obs) {
  ValueMap map;
  const int h = obs.image.height(), w = obs.image.width();
  std::vector<net::OutputMap> slices(kRotations);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < kRotations; ++k) {
    const auto pixels = image::normalized_pixels(obs.rotated[k], obs.reference);
    slices[k] = net::forward_full(params, pixels, h, w);
  }
  // Larger (padded) inputs give a larger map; the grid sits at its center.
  for (int k = 0; k < kRotations; ++k) {
    const auto& s = slices[k];
    const int oy = (s.height - kGridCells) / 2, ox = (s.width - kGridCells) / 2;
    for (int i = 0; i < kGridCells; ++i)
      for (int j = 0; j < kGridCells; ++j)
        for (int d = 0; d < kOpenings; ++d) map.at({k, i, j, d}) = s.at(d, oy + j, ox + i);
  }
  return map;
}

std::string to_token(const SelectionMethod& m) {
  switch (m.method) {
    case Method::random: return "random";
    case Method::maximum: return "maxN:" + std::to_string(m.n);
    case Method::probabilistic: return "prob";
    case Method::uncertain: return "uncertain";
  }
  return "random";
}

SelectionMethod parse_method(const std::string& token) {
  if (token == "random") return {Method::random, 1};
  if (token == "prob") return {Method::probabilistic, 1};
  if (token == "uncertain") return {Method::uncertain, 1};
  if (token.rfind("maxN:", 0) == 0) {
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(token.substr(5), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != token.size() - 5 || n < 1)
      throw std::invalid_argument("bad maximum selector token '" + token + "'");
    return {Method::maximum, n};
  }
  throw std::invalid_argument("unknown selector token '" + token + "'");
}

GraspIndex select_random(Rng& rng) {
  return GraspIndex::from_flat(static_cast<int>(uniform_below(rng, kActionCount)));
}

namespace {

GraspIndex select_random_excluding(Rng& rng, const std::vector<std::uint8_t>& mask) {
  if (!mask.empty() && std::all_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }))
    throw std::runtime_error("every cell is excluded");
  for (;;) {
    const auto g = select_random(rng);
    if (!skipped(mask, g.flat())) return g;
  }
}

}  // namespace

GraspIndex select_maximum(const ValueMap& map, int n, Rng& rng, Exclusion exclude) {
  if (n < 1) throw std::invalid_argument("maximum selector needs N >= 1");
  const auto mask = exclusion_mask(exclude);
  auto better = [&](int a, int b) {
    const float va = map.values[a], vb = map.values[b];
    return va > vb || (va == vb && a < b);
  };
  if (n == 1) {
    int best = -1;
    for (int f = 0; f < kActionCount; ++f)
      if (!skipped(mask, f) && (best < 0 || better(f, best))) best = f;
    if (best < 0) throw std::runtime_error("every cell is excluded");
    return GraspIndex::from_flat(best);
  }
  std::vector<int> cand;
  cand.reserve(kActionCount);
  for (int f = 0; f < kActionCount; ++f)
    if (!skipped(mask, f)) cand.push_back(f);
  if (cand.empty()) throw std::runtime_error("every cell is excluded");
  const std::size_t top = std::min<std::size_t>(n, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<long>(top), cand.end(), better);
  return GraspIndex::from_flat(cand[uniform_below(rng, top)]);
}

GraspIndex select_probabilistic(const ValueMap& map, Rng& rng, Exclusion exclude) {
  const auto mask = exclusion_mask(exclude);
  std::vector<double> cumulative(kActionCount);
  double total = 0;
  for (int f = 0; f < kActionCount; ++f) {
    if (!skipped(mask, f)) total += std::max(0.0f, map.values[f]);
    cumulative[f] = total;
  }
  if (!(total > 0)) return select_random_excluding(rng, mask);
  for (;;) {
    const double u = uniform01(rng) * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) continue;
    const int f = static_cast<int>(it - cumulative.begin());
    if (!skipped(mask, f)) return GraspIndex::from_flat(f);
  }
}

GraspIndex select_uncertain(const ValueMap& map, Exclusion exclude) {
  const auto mask = exclusion_mask(exclude);
  int best = -1;
  float best_gap = 0;
  for (int f = 0; f < kActionCount; ++f) {
    if (skipped(mask, f)) continue;
    const float gap = std::abs(0.5f - map.values[f]);
    if (best < 0 || gap < best_gap) {
      best = f;
      best_gap = gap;
    }
  }
  if (best < 0) throw std::runtime_error("every cell is excluded");
  return GraspIndex::from_flat(best);
}

GraspIndex select(const SelectionMethod& m, const ValueMap& map, Rng& rng, Exclusion exclude) {
  switch (m.method) {
    case Method::random: return select_random_excluding(rng, exclusion_mask(exclude));
    case Method::maximum: return select_maximum(map, m.n, rng, exclude);
    case Method::probabilistic: return select_probabilistic(map, rng, exclude);
    case Method::uncertain: return select_uncertain(map, exclude);
  }
  throw std::logic_error("unhandled selection method");
}

GraspPlan exploit_with_retry(const ValueMap& map, Rng& rng, Exclusion exclude) {
  GraspPlan plan;
  plan.first = select_maximum(map, 1, rng, exclude);
  std::vector<int> more(exclude.begin(), exclude.end());
  more.push_back(plan.first.flat());
  plan.retry = select_maximum(map, 5, rng, more);
  return plan;
}

void dump_value_map(const ValueMap& map, const std::filesystem::path& dir, const std::string& prefix) {
  std::filesystem::create_directories(dir);
  std::vector<float> slice(kGridCells * kGridCells);
  for (int k = 0; k < kRotations; ++k)
    for (int d = 0; d < kOpenings; ++d) {
      for (int j = 0; j < kGridCells; ++j)
        for (int i = 0; i < kGridCells; ++i) slice[j * kGridCells + i] = map.at({k, i, j, d});
      char name[64];
      std::snprintf(name, sizeof name, "%s_r%02d_d%d.pgm", prefix.c_str(), k, d);
      image::write_pgm_scaled(dir / name, kGridCells, kGridCells, slice, 0.0f, 1.0f);
    }
}

std::string format_slice(const ValueMap& map, int k_rot, int k_d) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  for (int j = 0; j < kGridCells; ++j) {
    for (int i = 0; i < kGridCells; ++i) out << (i ? " " : "") << map.at({k_rot, i, j, k_d});
    out << '\n';
  }
  return out.str();
}

}  // namespace grasplab::policy
