#pragma once

#include <vector>

namespace grasplab::sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

// Convex polygon, counter-clockwise.
using Polygon = std::vector<Vec2>;

Polygon make_rect(Vec2 center, Vec2 axis_u, double half_u, double half_v);
Polygon make_disk(Vec2 center, double radius, int segments = 32);

bool convex_intersect(const Polygon& a, const Polygon& b);
// 0 when the polygons overlap.
double convex_distance(const Polygon& a, const Polygon& b);

// Keep the part of the polygon with n . p <= c.
Polygon clip_halfplane(const Polygon& poly, Vec2 n, double c);

// Clip to the rectangle |(p - center) . u| <= half_u, |(p - center) . v| <= half_v.
Polygon clip_rect(const Polygon& poly, Vec2 center, Vec2 u, double half_u, double half_v);

bool inside_aabb(const Polygon& poly, double half_w, double half_h);

}  // namespace grasplab::sim
