#include "grasplab/sim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace grasplab::sim {

Polygon make_rect(Vec2 center, Vec2 u, double half_u, double half_v) {
  const Vec2 v{-u.y, u.x};
  return {center - u * half_u - v * half_v, center + u * half_u - v * half_v, center + u * half_u + v * half_v,
          center - u * half_u + v * half_v};
}

Polygon make_disk(Vec2 center, double radius, int segments) {
  Polygon p;
  p.reserve(segments);
  for (int k = 0; k < segments; ++k) {
    const double t = 2.0 * std::numbers::pi * k / segments;
    p.push_back({center.x + radius * std::cos(t), center.y + radius * std::sin(t)});
  }
  return p;
}

namespace {

bool separated_along(const Polygon& a, const Polygon& b, Vec2 axis) {
  double amin = std::numeric_limits<double>::infinity(), amax = -amin;
  double bmin = amin, bmax = -amin;
  for (auto p : a) {
    const double d = p.dot(axis);
    amin = std::min(amin, d);
    amax = std::max(amax, d);
  }
  for (auto p : b) {
    const double d = p.dot(axis);
    bmin = std::min(bmin, d);
    bmax = std::max(bmax, d);
  }
  return amax <= bmin || bmax <= amin;
}

bool has_separating_edge(const Polygon& a, const Polygon& b) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Vec2 e = a[(k + 1) % a.size()] - a[k];
    if (separated_along(a, b, Vec2{-e.y, e.x})) return true;
  }
  return false;
}

double point_segment_distance(Vec2 p, Vec2 s0, Vec2 s1) {
  const Vec2 e = s1 - s0;
  const double len2 = e.dot(e);
  double t = len2 > 0.0 ? (p - s0).dot(e) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 q = s0 + e * t;
  return std::hypot(p.x - q.x, p.y - q.y);
}

}  // namespace

bool convex_intersect(const Polygon& a, const Polygon& b) {
  if (a.empty() || b.empty()) return false;
  return !has_separating_edge(a, b) && !has_separating_edge(b, a);
}

double convex_distance(const Polygon& a, const Polygon& b) {
  if (convex_intersect(a, b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < b.size(); ++k)
    for (auto p : a) best = std::min(best, point_segment_distance(p, b[k], b[(k + 1) % b.size()]));
  for (std::size_t k = 0; k < a.size(); ++k)
    for (auto p : b) best = std::min(best, point_segment_distance(p, a[k], a[(k + 1) % a.size()]));
  return best;
}

Polygon clip_halfplane(const Polygon& poly, Vec2 n, double c) {
  Polygon out;
  if (poly.empty()) return out;
  out.reserve(poly.size() + 1);
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2 p = poly[k], q = poly[(k + 1) % poly.size()];
    const double dp = p.dot(n) - c, dq = q.dot(n) - c;
    if (dp <= 0.0) out.push_back(p);
    if ((dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0)) {
      const double t = dp / (dp - dq);
      out.push_back(p + (q - p) * t);
    }
  }
  return out;
}

Polygon clip_rect(const Polygon& poly, Vec2 center, Vec2 u, double half_u, double half_v) {
  const Vec2 v{-u.y, u.x};
  Polygon p = clip_halfplane(poly, u, center.dot(u) + half_u);
  p = clip_halfplane(p, u * -1.0, -center.dot(u) + half_u);
  p = clip_halfplane(p, v, center.dot(v) + half_v);
  p = clip_halfplane(p, v * -1.0, -center.dot(v) + half_v);
  return p;
}

bool inside_aabb(const Polygon& poly, double half_w, double half_h) {
  for (auto p : poly)
    if (std::abs(p.x) > half_w || std::abs(p.y) > half_h) return false;
  return true;
}

}  // namespace grasplab::sim
