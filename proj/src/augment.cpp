#include "ossr/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace ossr {

namespace {

struct Affine {
  double a = 1, b = 0, c = 0, d = 1;  // [[a, b], [c, d]]
  Vec2 apply(Vec2 p) const { return {a * p.x + b * p.y, c * p.x + d * p.y}; }
};

Vec2 centroid(const std::vector<Vec2>& pts, std::size_t begin, std::size_t end) {
  Vec2 c{};
  for (std::size_t i = begin; i < end; ++i) c = c + pts[i];
  return c / static_cast<double>(end - begin);
}

}  // namespace

PointCloud augment(const PointCloud& cloud, const AugmentPolicy& policy, std::uint64_t seed) {
  PointCloud out = cloud;
  if (cloud.points.empty()) return out;
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * std::uniform_real_distribution<double>(0, 1)(rng); };

  const double theta = uniform(-policy.rotation_deg, policy.rotation_deg) * std::numbers::pi / 180.0;
  const double scale = uniform(policy.scale_min, policy.scale_max);
  const double shear = uniform(-policy.shear, policy.shear);
  const double cs = std::cos(theta), sn = std::sin(theta);
  // R * S * Sh with Sh = [[1, shear], [0, 1]]
  const Affine global{scale * cs, scale * (cs * shear - sn), scale * sn, scale * (sn * shear + cs)};
  const Vec2 c = centroid(cloud.points, 0, cloud.points.size());
  for (auto& p : out.points) p = c + global.apply(p - c);

  const std::size_t n = out.points.size();
  const std::size_t w = static_cast<std::size_t>(std::max(1, policy.window));
  for (std::size_t begin = 0; begin < n;) {
    std::size_t run_end = begin;
    while (run_end < n && out.run[run_end] == out.run[begin]) ++run_end;
    for (std::size_t s = begin; s < run_end; s += w) {
      const std::size_t e = std::min(run_end, s + w);
      const double j = policy.window_jitter;
      const Affine local{1 + uniform(-j, j), uniform(-j, j), uniform(-j, j), 1 + uniform(-j, j)};
      const Vec2 wc = centroid(out.points, s, e);
      for (std::size_t i = s; i < e; ++i) out.points[i] = wc + local.apply(out.points[i] - wc);
    }
    begin = run_end;
  }
  return out;
}

PointCloud rotate_quarter(const PointCloud& cloud, int quarter_turns) {
  PointCloud out = cloud;
  const int q = ((quarter_turns % 4) + 4) % 4;
  if (q == 0 || cloud.points.empty()) return out;
  const Vec2 c = BBox::of(cloud.points).center();
  for (auto& p : out.points) {
    Vec2 d = p - c;
    for (int k = 0; k < q; ++k) d = {-d.y, d.x};  // clockwise on screen with y down
    p = c + d;
  }
  return out;
}

}  // namespace ossr
