#include "grasplab/image/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "grasplab/core/grid.hpp"

namespace grasplab::image {

namespace {

// Number of quarter turns if the angle is a multiple of pi/2, else -1.
int quarter_turns(double a) {
  const double q = a / (0.5 * std::numbers::pi);
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-12) return -1;
  return static_cast<int>(((static_cast<long>(r) % 4) + 4) % 4);
}

// Offset (dc, dr) rotated by a quarter turn count; exact integer arithmetic on half-pixel grids.
inline void rotate_quarter(int turns, double dc, double dr, double& oc, double& orow) {
  switch (turns) {
    case 0: oc = dc; orow = dr; break;
    case 1: oc = -dr; orow = dc; break;
    case 2: oc = -dc; orow = -dr; break;
    default: oc = dr; orow = -dc; break;
  }
}

}  // namespace

std::vector<float> normalized_pixels(const DepthImage& img, float reference) {
  const auto& d = img.data();
  const auto& m = img.missing_mask();
  std::vector<float> out(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) out[k] = normalize_depth(m[k] ? reference : d[k], reference);
  return out;
}

float sample_bilinear(const DepthImage& img, double row, double col) {
  const int r0 = static_cast<int>(std::floor(row));
  const int c0 = static_cast<int>(std::floor(col));
  const double fr = row - r0, fc = col - c0;
  const int r1 = std::min(r0 + 1, img.height() - 1);
  const int c1 = std::min(c0 + 1, img.width() - 1);
  const double v00 = img.at(r0, c0), v01 = img.at(r0, c1);
  const double v10 = img.at(r1, c0), v11 = img.at(r1, c1);
  const double top = v00 + fc * (v01 - v00);
  const double bottom = v10 + fc * (v11 - v10);
  return static_cast<float>(top + fr * (bottom - top));
}

WindowImage extract_window(const DepthImage& img, double x, double y, double a) {
  if (!img.contains(x, y)) throw std::out_of_range("window center outside image");
  const DepthImage src = filled(img);
  const float ref = reference_level(img);
  WindowImage w;
  w.x = x;
  w.y = y;
  w.a = a;

  const double cc = img.col_of(x), cr = img.row_of(y);
  const int turns = quarter_turns(a);
  const double ca = std::cos(a), sa = std::sin(a);
  const double half = 0.5 * (kWindowSize - 1);
  const double eps = 1e-9;
  for (int r = 0; r < kWindowSize; ++r) {
    for (int c = 0; c < kWindowSize; ++c) {
      const double dc = c - half, dr = r - half;
      double oc, orow;
      if (turns >= 0) {
        rotate_quarter(turns, dc, dr, oc, orow);
      } else {
        oc = ca * dc - sa * dr;
        orow = sa * dc + ca * dr;
      }
      const double sc = cc + oc, sr = cr + orow;
      if (sc < -eps || sr < -eps || sc > img.width() - 1 + eps || sr > img.height() - 1 + eps)
        throw std::out_of_range("window extends beyond image; pad first");
      float v;
      const double rc = std::round(sc), rr = std::round(sr);
      if (std::abs(sc - rc) < 1e-9 && std::abs(sr - rr) < 1e-9)
        v = src.at(static_cast<int>(rr), static_cast<int>(rc));
      else
        v = sample_bilinear(src, std::clamp(sr, 0.0, img.height() - 1.0), std::clamp(sc, 0.0, img.width() - 1.0));
      w.values[r * kWindowSize + c] = normalize_depth(v, ref);
    }
  }
  return w;
}

DepthImage rotate_about_center(const DepthImage& img, double angle) {
  const DepthImage src = filled(img);
  const float ref = reference_level(img);
  DepthImage out(img.width(), img.height(), img.pitch(), img.origin_x(), img.origin_y(), ref);
  const int turns = img.width() == img.height() ? quarter_turns(angle) : -1;
  if (turns == 0) return img;

  const double hc = 0.5 * img.width(), hr = 0.5 * img.height();
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      const double dc = c + 0.5 - hc, dr = r + 0.5 - hr;
      double oc, orow;
      if (turns > 0) {
        rotate_quarter(turns, dc, dr, oc, orow);
        const int sc = static_cast<int>(std::lround(oc + hc - 0.5));
        const int sr = static_cast<int>(std::lround(orow + hr - 0.5));
        out.at(r, c) = img.at(sr, sc);
        out.set_missing(r, c, img.missing(sr, sc));
        continue;
      }
      oc = ca * dc - sa * dr;
      orow = sa * dc + ca * dr;
      const double sc = oc + hc - 0.5, sr = orow + hr - 0.5;
      if (sc < 0.0 || sr < 0.0 || sc > img.width() - 1 || sr > img.height() - 1) {
        out.set_missing(r, c, true);
        continue;
      }
      out.at(r, c) = sample_bilinear(src, sr, sc);
    }
  }
  return out;
}

std::vector<DepthImage> rotate_stack(const DepthImage& img) {
  std::vector<DepthImage> stack(kRotations);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < kRotations; ++k) stack[k] = rotate_about_center(img, rotation_angle(k));
  return stack;
}

double z_from_depth(const DepthImage& img, double x, double y, const ZProbe& probe) {
  if (!img.contains(x, y)) throw std::out_of_range("z probe outside image");
  const double cc = img.col_of(x), cr = img.row_of(y);
  const double rad = probe.radius_mm / img.pitch();
  const int c0 = std::max(0, static_cast<int>(std::floor(cc - rad)));
  const int c1 = std::min(img.width() - 1, static_cast<int>(std::ceil(cc + rad)));
  const int r0 = std::max(0, static_cast<int>(std::floor(cr - rad)));
  const int r1 = std::min(img.height() - 1, static_cast<int>(std::ceil(cr + rad)));
  bool any = false;
  float top = 0.0f;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      if ((r - cr) * (r - cr) + (c - cc) * (c - cc) > rad * rad + 1e-9) continue;
      if (img.missing(r, c)) continue;
      top = any ? std::max(top, img.at(r, c)) : img.at(r, c);
      any = true;
    }
  if (!any) throw std::runtime_error("z probe neighborhood has no valid depth");
  return std::max(0.0, static_cast<double>(top) - probe.descent_offset_mm);
}

DepthImage pad_for_inference(const DepthImage& img, int target) {
  if (img.width() >= target && img.height() >= target) return img;
  const int w = std::max(target, img.width());
  const int h = std::max(target, img.height());
  const int left = (w - img.width()) / 2;
  const int top = (h - img.height()) / 2;
  const float ref = reference_level(img);
  DepthImage out(w, h, img.pitch(), img.origin_x() - left * img.pitch(), img.origin_y() - top * img.pitch(), ref);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const int sr = r - top, sc = c - left;
      if (sr < 0 || sc < 0 || sr >= img.height() || sc >= img.width()) {
        out.set_missing(r, c, true);
      } else {
        out.at(r, c) = img.at(sr, sc);
        out.set_missing(r, c, img.missing(sr, sc));
      }
    }
  return out;
}

}  // namespace grasplab::image
