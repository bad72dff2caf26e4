#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace ossr {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
constexpr Vec2 lerp(Vec2 a, Vec2 b, double t) { return a + (b - a) * t; }
inline Vec2 rotate(Vec2 p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

/// Axis-aligned box in continuous pixel coordinates, [x0,x1] x [y0,y1].
struct BBox {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  bool empty() const { return x1 < x0 || y1 < y0; }
  double width() const { return empty() ? 0.0 : x1 - x0; }
  double height() const { return empty() ? 0.0 : y1 - y0; }
  double area() const { return width() * height(); }
  Vec2 center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }

  void expand(Vec2 p) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  void expand(const BBox& b) {
    if (b.empty()) return;
    expand(Vec2{b.x0, b.y0});
    expand(Vec2{b.x1, b.y1});
  }
  BBox inflated(double m) const { return {x0 - m, y0 - m, x1 + m, y1 + m}; }
  bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  bool intersects(const BBox& b) const {
    return !(b.x0 > x1 || b.x1 < x0 || b.y0 > y1 || b.y1 < y0);
  }
  /// Euclidean distance from p to the box (0 inside).
  double distance_to(Vec2 p) const {
    const double dx = std::max({x0 - p.x, 0.0, p.x - x1});
    const double dy = std::max({y0 - p.y, 0.0, p.y - y1});
    return std::hypot(dx, dy);
  }

  static BBox of(std::span<const Vec2> pts) {
    BBox b;
    for (auto p : pts) b.expand(p);
    return b;
  }
  bool operator==(const BBox&) const = default;
};

inline double iou(const BBox& a, const BBox& b) {
  if (a.empty() || b.empty()) return 0.0;
  const double ix = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double iy = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

/// Folds an angle onto the undirected range (-pi/2, pi/2].
inline double fold_undirected(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::remainder(a, pi);  // [-pi/2, pi/2]
  if (a <= -pi / 2) a += pi;
  return a;
}

/// Smallest difference between two undirected orientations, in [0, pi/2].
inline double undirected_diff(double a, double b) {
  constexpr double pi = std::numbers::pi;
  double d = std::fabs(std::remainder(a - b, pi));
  return std::min(d, pi - d);
}

}  // namespace ossr
