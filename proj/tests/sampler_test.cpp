#include <doctest.h>

#include <numbers>
#include <random>

#include "ossr/sampler.hpp"
#include "support.hpp"

using namespace ossr;

namespace {

Loop polygon(std::initializer_list<Vec2> pts) {
  Loop loop;
  std::vector<Vec2> v(pts);
  for (std::size_t i = 0; i < v.size(); ++i) loop.segments.push_back(Segment::line(v[i], v[(i + 1) % v.size()]));
  return loop;
}

// Four-arc cubic approximation of a circle; radial error is about 2.7e-4 r.
Loop circle(Vec2 c, double r) {
  const double k = 0.5522847498 * r;
  Loop loop;
  const Vec2 e[4] = {{r, 0}, {0, r}, {-r, 0}, {0, -r}};
  for (int i = 0; i < 4; ++i) {
    const Vec2 a = e[i], b = e[(i + 1) % 4];
    const Vec2 ta = Vec2{-a.y, a.x} / r * k, tb = Vec2{-b.y, b.x} / r * k;
    loop.segments.push_back(Segment::bezier(c + a, c + a + ta, c + b - tb, c + b));
  }
  return loop;
}

double dist_to_square(Vec2 p, double x0, double y0, double x1, double y1) {
  const double dx = std::min(std::abs(p.x - x0), std::abs(p.x - x1));
  const double dy = std::min(std::abs(p.y - y0), std::abs(p.y - y1));
  const bool in_x = p.x >= x0 - 1e-9 && p.x <= x1 + 1e-9, in_y = p.y >= y0 - 1e-9 && p.y <= y1 + 1e-9;
  if (in_x && in_y) return std::min(dx, dy);
  return 1e9;
}

SampledPath row_pair(double gap, int n) {
  SampledPath p;
  for (int r = 0; r < 2; ++r) {
    SampledLoop l;
    l.closed = false;
    for (int i = 0; i < n; ++i) {
      l.points.push_back({5.0 * i, r * gap});
      l.slopes.push_back(0.0);
      l.merged.push_back(0);
    }
    p.loops.push_back(l);
  }
  return p;
}

}  // namespace

TEST_CASE("normalize_scale") {
  VectorPathSet v;
  v.width = 2000;
  v.height = 1000;
  v.paths.push_back({{polygon({{100, 50}, {300, 50}, {300, 250}})}});
  const VectorPathSet s = normalize_scale(v, 4000);
  CHECK(s.width == 4000);
  CHECK(s.paths[0].loops[0].segments[0].start() == Vec2{200, 100});
  v.width = 4000;
  CHECK(normalize_scale(v, 4000).paths[0].loops[0].segments[1].start() == Vec2{300, 50});
  CHECK_THROWS(normalize_scale(VectorPathSet{}, 4000));

  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0, 900);
  for (int t = 0; t < 20; ++t) {
    VectorPathSet r;
    r.width = 937;
    r.height = 600;
    r.paths.push_back({{polygon({{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}})}});
    auto box = [](const VectorPathSet& ps) {
      BBox b;
      for (const auto& s : ps.paths[0].loops[0].segments) b.expand(s.start());
      return b;
    };
    const BBox a = box(r), b = box(normalize_scale(r, 4000));
    CHECK(a.width() / a.height() == doctest::Approx(b.width() / b.height()).epsilon(1e-9));
  }
}

TEST_CASE("square of perimeter 400 gives 80 samples on its boundary") {
  const SampledLoop s = sample_loop(polygon({{0, 0}, {100, 0}, {100, 100}, {0, 100}}), 5.0);
  REQUIRE(s.size() == 80);
  CHECK(s.length == doctest::Approx(400));
  for (auto p : s.points) CHECK(dist_to_square(p, 0, 0, 100, 100) < 1e-9);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = distance(s.points[i], s.points[(i + 1) % s.size()]);
    CHECK(d >= 2.5);
    CHECK(d <= 7.5);
  }
}

TEST_CASE("circle samples") {
  for (double r : {20.0, 50.0, 133.0}) {
    const SampledLoop s = sample_loop(circle({200, 200}, r), 5.0);
    CHECK(s.size() == static_cast<std::size_t>(std::lround(2 * std::numbers::pi * r / 5)));
    for (auto p : s.points) CHECK(std::abs(distance(p, {200, 200}) - r) < 0.25);
  }
}

TEST_CASE("short loops are degenerate") {
  const SampledLoop s = sample_loop(polygon({{0, 0}, {3, 0}}), 5.0);
  CHECK(s.degenerate);
  CHECK(s.size() == 2);
}

TEST_CASE("sampling commutes with translation") {
  Loop a = circle({100, 100}, 30), b = circle({137.5, 91.25}, 30);
  const SampledLoop sa = sample_loop(a, 5.0), sb = sample_loop(b, 5.0);
  REQUIRE(sa.size() == sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i)
    CHECK(distance(sa.points[i] + Vec2{37.5, -8.75}, sb.points[i]) < 1e-9);
}

TEST_CASE("sample count tracks the adaptive arc length") {
  const Loop c = circle({0, 0}, 41);
  CHECK(sample_loop(c, 5.0).size() == static_cast<std::size_t>(std::lround(loop_length(c) / 5.0)));
}

TEST_CASE("merge_adjacent on parallel rows") {
  const std::vector<SampledPath> far{row_pair(10.0, 20)};
  const auto kept = merge_adjacent(far, 5.0);
  CHECK(kept[0].point_count() == 40);

  const std::vector<SampledPath> near{row_pair(2.5, 20)};
  const auto merged = merge_adjacent(near, 5.0);
  CHECK(merged[0].point_count() == 20);
  for (const auto& l : merged[0].loops)
    for (std::size_t i = 0; i < l.size(); ++i) {
      CHECK(l.points[i].y == doctest::Approx(1.25));
      CHECK(l.merged[i] == 1);
    }
  CHECK(merge_adjacent(merged, 5.0)[0].point_count() == merged[0].point_count());
}

TEST_CASE("thin stroke merges to roughly half the samples") {
  const BinaryImage stroke = testsupport::rect(400, 60, 20, 28, 380, 31);
  VectorPathSet v = trace(stroke);
  v = normalize_scale(v, 400);
  const auto sampled = sample_paths(v, 5.0);
  const auto merged = merge_adjacent(sampled, 5.0);
  const double ratio = static_cast<double>(merged[0].point_count()) / static_cast<double>(sampled[0].point_count());
  CHECK(ratio > 0.45);
  CHECK(ratio < 0.6);
  const auto twice = merge_adjacent(merged, 5.0);
  REQUIRE(twice[0].loops.size() == merged[0].loops.size());
  for (std::size_t l = 0; l < twice[0].loops.size(); ++l) CHECK(twice[0].loops[l].points == merged[0].loops[l].points);
}

TEST_CASE("slopes are undirected and in range") {
  const auto sampled = sample_paths(VectorPathSet{200, 200, {{{circle({100, 100}, 40)}}}}, 5.0);
  for (const auto& l : sampled[0].loops)
    for (double s : l.slopes) {
      CHECK(s > -std::numbers::pi / 2);
      CHECK(s <= std::numbers::pi / 2);
    }
}
