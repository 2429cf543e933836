#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "grasplab/sim/geometry.hpp"

namespace grasplab::sim {

enum class ObjectKind { cylinder, cube };
enum class EdgeProfile { rounded, sharp };
enum class RestingPose { upright, lying };

struct ObjectSpec {
  ObjectKind kind = ObjectKind::cylinder;
  double diameter_mm = 15.0;  // cylinder
  double height_mm = 60.0;    // cylinder length
  double edge_mm = 25.0;      // cube
  EdgeProfile edge_profile = EdgeProfile::rounded;

  static ObjectSpec cylinder(double diameter = 15.0, double height = 60.0) {
    return {ObjectKind::cylinder, diameter, height, 25.0, EdgeProfile::rounded};
  }
  static ObjectSpec cube(double edge = 25.0) { return {ObjectKind::cube, 15.0, 60.0, edge, EdgeProfile::sharp}; }

  void validate() const;
  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

struct PlacedObject {
  ObjectSpec spec;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  RestingPose pose = RestingPose::upright;

  // Highest point above the floor.
  double top() const;
  // Horizontal cross-section of the solid at height h (empty at or above the top).
  Polygon section(double h) const;
  Polygon footprint() const { return section(0.0); }
  // Circumradius of the footprint around the centroid.
  double footprint_radius() const;
  // Surface height at a task-frame point, 0 outside the footprint.
  double height_at(double px, double py) const;

  friend bool operator==(const PlacedObject&, const PlacedObject&) = default;
};

struct Bin {
  double inner_w_mm = 160.0;
  double inner_h_mm = 160.0;
  double wall_height_mm = 80.0;
  double wall_thickness_mm = 10.0;
  friend bool operator==(const Bin&, const Bin&) = default;
};

// Value object: a bin, the objects lying in it, and the random stream that drives grasp noise.
struct Scene {
  Bin bin;
  std::vector<PlacedObject> objects;
  std::uint64_t rng_seed = 0;
  std::uint64_t attempts = 0;

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct SpawnOptions {
  double p_upright = 0.5;
  double contact_tolerance_mm = 1.0;
  int max_retries = 2000;
};

class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// m non-overlapping objects by rejection sampling; deterministic in the seed.
Scene spawn_scene(int m, const ObjectSpec& spec, std::uint64_t seed, const SpawnOptions& opts = {},
                  const Bin& bin = {});

// Smallest pairwise footprint clearance (infinity with fewer than two objects).
double min_clearance(const Scene& scene);

// Line-delimited text: a header line then one object per line.
void write_scene(std::ostream& os, const Scene& scene);
Scene read_scene(std::istream& is);
std::string to_string(ObjectKind k);
std::string to_string(RestingPose p);

}  // namespace grasplab::sim
