#include "grasplab/sim/scene.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "grasplab/core/random.hpp"

namespace grasplab::sim {

namespace {

constexpr double kFilletMm = 2.0;

// Height of a flat-topped solid of height top at distance `inset` inside its outline.
double filleted_top(double top, double inset, EdgeProfile profile) {
  if (profile == EdgeProfile::sharp || inset >= kFilletMm) return top;
  const double dx = kFilletMm - inset;
  return top - kFilletMm + std::sqrt(std::max(0.0, kFilletMm * kFilletMm - dx * dx));
}

// Inset of the outline at height h for a filleted top edge.
double fillet_inset(double top, double h, EdgeProfile profile) {
  if (profile == EdgeProfile::sharp || h <= top - kFilletMm) return 0.0;
  const double dh = h - (top - kFilletMm);
  return kFilletMm - std::sqrt(std::max(0.0, kFilletMm * kFilletMm - dh * dh));
}

}  // namespace

void ObjectSpec::validate() const {
  if (kind == ObjectKind::cylinder && !(diameter_mm > 0.0 && height_mm > 0.0))
    throw std::invalid_argument("cylinder dimensions must be positive");
  if (kind == ObjectKind::cube && !(edge_mm > 0.0)) throw std::invalid_argument("cube edge must be positive");
}

double PlacedObject::top() const {
  if (spec.kind == ObjectKind::cube) return spec.edge_mm;
  return pose == RestingPose::upright ? spec.height_mm : spec.diameter_mm;
}

Polygon PlacedObject::section(double h) const {
  const double t = top();
  if (h >= t) return {};
  const Vec2 c{x, y};
  const Vec2 u{std::cos(yaw), std::sin(yaw)};
  if (spec.kind == ObjectKind::cube) {
    const double half = 0.5 * spec.edge_mm - fillet_inset(t, h, spec.edge_profile);
    return make_rect(c, u, half, half);
  }
  const double r = 0.5 * spec.diameter_mm;
  if (pose == RestingPose::upright) return make_disk(c, r - fillet_inset(t, h, spec.edge_profile));
  const double hw = h <= r ? r : std::sqrt(std::max(0.0, r * r - (h - r) * (h - r)));
  return make_rect(c, u, 0.5 * spec.height_mm, hw);
}

double PlacedObject::footprint_radius() const {
  if (spec.kind == ObjectKind::cube) return spec.edge_mm / std::numbers::sqrt2;
  const double r = 0.5 * spec.diameter_mm;
  return pose == RestingPose::upright ? r : std::hypot(0.5 * spec.height_mm, r);
}

double PlacedObject::height_at(double px, double py) const {
  const double dx = px - x, dy = py - y;
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double along = c * dx + s * dy;
  const double across = -s * dx + c * dy;
  if (spec.kind == ObjectKind::cube) {
    const double half = 0.5 * spec.edge_mm;
    const double inset = half - std::max(std::abs(along), std::abs(across));
    return inset < 0.0 ? 0.0 : filleted_top(spec.edge_mm, inset, spec.edge_profile);
  }
  const double r = 0.5 * spec.diameter_mm;
  if (pose == RestingPose::upright) {
    const double inset = r - std::hypot(dx, dy);
    return inset < 0.0 ? 0.0 : filleted_top(spec.height_mm, inset, spec.edge_profile);
  }
  if (std::abs(along) > 0.5 * spec.height_mm || std::abs(across) > r) return 0.0;
  return r + std::sqrt(std::max(0.0, r * r - across * across));
}

Scene spawn_scene(int m, const ObjectSpec& spec, std::uint64_t seed, const SpawnOptions& opts, const Bin& bin) {
  if (m < 0) throw std::invalid_argument("object count must be non-negative");
  spec.validate();
  Scene scene;
  scene.bin = bin;
  scene.rng_seed = seed;
  Rng rng(derive_seed(seed, {0x5eedULL}));
  const double hw = 0.5 * bin.inner_w_mm, hh = 0.5 * bin.inner_h_mm;
  std::vector<Polygon> placed;
  for (int n = 0; n < m; ++n) {
    bool ok = false;
    for (int attempt = 0; attempt < opts.max_retries && !ok; ++attempt) {
      PlacedObject obj;
      obj.spec = spec;
      obj.x = (2.0 * uniform01(rng) - 1.0) * hw;
      obj.y = (2.0 * uniform01(rng) - 1.0) * hh;
      obj.yaw = uniform01(rng) * std::numbers::pi;
      const bool upright = uniform01(rng) < opts.p_upright;
      obj.pose = (spec.kind == ObjectKind::cube || upright) ? RestingPose::upright : RestingPose::lying;
      Polygon fp = obj.footprint();
      if (!inside_aabb(fp, hw, hh)) continue;
      ok = true;
      for (const auto& other : placed)
        if (convex_distance(fp, other) < opts.contact_tolerance_mm) {
          ok = false;
          break;
        }
      if (ok) {
        placed.push_back(std::move(fp));
        scene.objects.push_back(obj);
      }
    }
    if (!ok) throw PlacementError("could not place object " + std::to_string(n + 1) + " of " + std::to_string(m));
  }
  return scene;
}

double min_clearance(const Scene& scene) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < scene.objects.size(); ++a)
    for (std::size_t b = a + 1; b < scene.objects.size(); ++b)
      best = std::min(best, convex_distance(scene.objects[a].footprint(), scene.objects[b].footprint()));
  return best;
}

std::string to_string(ObjectKind k) { return k == ObjectKind::cube ? "cube" : "cylinder"; }
std::string to_string(RestingPose p) { return p == RestingPose::lying ? "lying" : "upright"; }

void write_scene(std::ostream& os, const Scene& scene) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "scene 1 bin " << scene.bin.inner_w_mm << ' ' << scene.bin.inner_h_mm << ' ' << scene.bin.wall_height_mm << ' '
      << scene.bin.wall_thickness_mm << " seed " << scene.rng_seed << " attempts " << scene.attempts << " objects "
      << scene.objects.size() << '\n';
  for (const auto& o : scene.objects) {
    out << to_string(o.spec.kind) << ' ' << o.spec.diameter_mm << ' ' << o.spec.height_mm << ' ' << o.spec.edge_mm
        << ' ' << (o.spec.edge_profile == EdgeProfile::sharp ? "sharp" : "rounded") << ' ' << o.x << ' ' << o.y << ' '
        << o.yaw << ' ' << to_string(o.pose) << '\n';
  }
  os << out.str();
}

Scene read_scene(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("scene: missing header");
  std::istringstream hs(line);
  std::string tag, kw_bin, kw_seed, kw_attempts, kw_objects;
  int version = 0;
  std::size_t count = 0;
  Scene s;
  hs >> tag >> version >> kw_bin >> s.bin.inner_w_mm >> s.bin.inner_h_mm >> s.bin.wall_height_mm >>
      s.bin.wall_thickness_mm >> kw_seed >> s.rng_seed >> kw_attempts >> s.attempts >> kw_objects >> count;
  if (!hs || tag != "scene" || version != 1 || kw_bin != "bin" || kw_seed != "seed" || kw_attempts != "attempts" ||
      kw_objects != "objects")
    throw std::runtime_error("scene: malformed header");
  for (std::size_t n = 0; n < count; ++n) {
    if (!std::getline(is, line)) throw std::runtime_error("scene: truncated object list");
    std::istringstream ls(line);
    std::string kind, profile, pose;
    PlacedObject o;
    ls >> kind >> o.spec.diameter_mm >> o.spec.height_mm >> o.spec.edge_mm >> profile >> o.x >> o.y >> o.yaw >> pose;
    if (!ls) throw std::runtime_error("scene: malformed object line");
    if (kind == "cylinder") o.spec.kind = ObjectKind::cylinder;
    else if (kind == "cube") o.spec.kind = ObjectKind::cube;
    else throw std::runtime_error("scene: unknown object kind " + kind);
    o.spec.edge_profile = profile == "sharp" ? EdgeProfile::sharp : EdgeProfile::rounded;
    o.pose = pose == "lying" ? RestingPose::lying : RestingPose::upright;
    o.spec.validate();
    s.objects.push_back(o);
  }
  return s;
}

}  // namespace grasplab::sim
