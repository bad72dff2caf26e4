#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "ossr/geometry.hpp"

namespace ossr {

/// Uniform hash grid over a fixed point set for radius queries.
class PointGrid {
 public:
  PointGrid(const std::vector<Vec2>& pts, double cell) : pts_(&pts), cell_(cell) {
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[key(cell_of(pts[i].x), cell_of(pts[i].y))].push_back(i);
  }

  /// Calls fn(index) for every point within `radius` of p (inclusive).
  template <class Fn>
  void for_each_within(Vec2 p, double radius, Fn&& fn) const {
    const long cx0 = cell_of(p.x - radius), cx1 = cell_of(p.x + radius);
    const long cy0 = cell_of(p.y - radius), cy1 = cell_of(p.y + radius);
    const double r2 = radius * radius;
    for (long cy = cy0; cy <= cy1; ++cy)
      for (long cx = cx0; cx <= cx1; ++cx) {
        auto it = cells_.find(key(cx, cy));
        if (it == cells_.end()) continue;
        for (std::size_t i : it->second) {
          const Vec2 d = (*pts_)[i] - p;
          if (d.x * d.x + d.y * d.y <= r2) fn(i);
        }
      }
  }

 private:
  long cell_of(double v) const { return static_cast<long>(std::floor(v / cell_)); }
  static std::uint64_t key(long cx, long cy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) | static_cast<std::uint32_t>(cy);
  }

  const std::vector<Vec2>* pts_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

/// Disjoint-set forest with path halving; union keeps the smaller root.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
  }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace ossr
