#include "ossr/sampler.hpp"

#include <cmath>
#include <limits>

#include "ossr/error.hpp"
#include "ossr/spatial.hpp"

namespace ossr {

std::size_t SampledPath::point_count() const {
  std::size_t n = 0;
  for (const auto& l : loops) n += l.size();
  return n;
}

VectorPathSet normalize_scale(const VectorPathSet& paths, double target_width) {
  if (paths.width <= 0 || paths.height <= 0) throw Error(ErrorCode::EmptyInput, "canvas has no extent");
  const double s = target_width / paths.width;
  VectorPathSet out = paths;
  out.width = static_cast<int>(std::lround(paths.width * s));
  out.height = static_cast<int>(std::lround(paths.height * s));
  for (auto& path : out.paths)
    for (auto& loop : path.loops) {
      for (auto& seg : loop.segments)
        for (auto& p : seg.p) p = p * s;
      loop.signed_area *= s * s;
    }
  return out;
}

namespace {

struct Polyline {
  std::vector<Vec2> pts;     // closed: the edge back to pts[0] is implied
  std::vector<double> cum;   // cum[i] = arc length at pts[i]; cum.back() = total
};

Polyline fine_polyline(const Loop& loop, double tol) {
  Polyline pl;
  pl.pts = flatten(loop, tol);
  pl.cum.resize(pl.pts.size() + 1, 0.0);
  for (std::size_t i = 0; i < pl.pts.size(); ++i)
    pl.cum[i + 1] = pl.cum[i] + distance(pl.pts[i], pl.pts[(i + 1) % pl.pts.size()]);
  return pl;
}

Vec2 point_at(const Polyline& pl, double s, std::size_t& hint) {
  const std::size_t n = pl.pts.size();
  while (hint + 1 < pl.cum.size() - 1 && pl.cum[hint + 1] < s) ++hint;
  const double seg = pl.cum[hint + 1] - pl.cum[hint];
  const double t = seg > 0 ? std::clamp((s - pl.cum[hint]) / seg, 0.0, 1.0) : 0.0;
  return lerp(pl.pts[hint], pl.pts[(hint + 1) % n], t);
}

// Undirected mean of two or more orientations via doubled angles.
double undirected_mean(std::initializer_list<double> angles, double fallback) {
  double c = 0, s = 0;
  for (double a : angles) {
    c += std::cos(2 * a);
    s += std::sin(2 * a);
  }
  if (std::hypot(c, s) < 1e-12) return fold_undirected(fallback);
  return fold_undirected(std::atan2(s, c) / 2);
}

double direction(Vec2 a, Vec2 b) { return std::atan2(b.y - a.y, b.x - a.x); }

}  // namespace

double loop_length(const Loop& loop, double tolerance) { return fine_polyline(loop, tolerance).cum.back(); }

SampledLoop sample_loop(const Loop& loop, double delta) {
  if (!(delta > 0)) throw Error(ErrorCode::InvalidConfig, "sampling interval must be positive");
  SampledLoop out;
  const Polyline pl = fine_polyline(loop, 1e-3);
  if (pl.pts.empty()) return out;
  const double L = pl.cum.back();
  out.length = L;
  std::size_t hint = 0;
  if (L < 2 * delta) {
    out.degenerate = true;
    out.points = {point_at(pl, 0.0, hint), point_at(pl, L / 2, hint)};
  } else {
    const auto n = static_cast<std::size_t>(std::lround(L / delta));
    const double step = L / static_cast<double>(n);
    out.points.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.points.push_back(point_at(pl, step * static_cast<double>(k), hint));
  }
  out.merged.assign(out.points.size(), 0);
  out.slopes.resize(out.points.size());
  for (std::size_t i = 0; i < out.points.size(); ++i) out.slopes[i] = point_slope(out, i);
  return out;
}

std::vector<SampledPath> sample_paths(const VectorPathSet& paths, double delta) {
  std::vector<SampledPath> out;
  out.reserve(paths.paths.size());
  for (std::size_t p = 0; p < paths.paths.size(); ++p) {
    SampledPath sp;
    sp.path_id = static_cast<int>(p);
    for (const auto& loop : paths.paths[p].loops) sp.loops.push_back(sample_loop(loop, delta));
    out.push_back(std::move(sp));
  }
  return out;
}

double point_slope(const SampledLoop& loop, std::size_t i) {
  const std::size_t n = loop.points.size();
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "slope needs at least two points");
  if (n == 2) return fold_undirected(direction(loop.points[0], loop.points[1]));
  std::size_t a, b;
  if (loop.closed) {
    a = (i + n - 1) % n;
    b = (i + 1) % n;
  } else {
    a = i == 0 ? 0 : i - 1;
    b = i + 1 == n ? i : i + 1;
  }
  const Vec2 pa = loop.points[a], p = loop.points[i], pb = loop.points[b];
  const double chord = direction(pa, pb);
  if (a == i || b == i) return fold_undirected(chord);
  return undirected_mean({direction(pa, p), direction(p, pb), chord}, chord);
}

namespace {

struct Sample {
  int path, loop;
  Vec2 pos;
  double slope;
  std::uint8_t merged;
};

}  // namespace

std::vector<SampledPath> merge_adjacent(const std::vector<SampledPath>& paths, double tau) {
  if (!(tau > 0)) throw Error(ErrorCode::InvalidConfig, "merge distance must be positive");
  // Flattened in (path, loop, index) order, so a lower flat index is a lower key.
  std::vector<Sample> samples;
  for (std::size_t p = 0; p < paths.size(); ++p)
    for (std::size_t l = 0; l < paths[p].loops.size(); ++l) {
      const auto& loop = paths[p].loops[l];
      for (std::size_t i = 0; i < loop.size(); ++i)
        samples.push_back({static_cast<int>(p), static_cast<int>(l), loop.points[i], loop.slopes[i], loop.merged[i]});
    }
  std::vector<std::uint8_t> closed;
  std::vector<std::size_t> loop_start;  // per flat sample: first flat index of its loop
  std::vector<std::size_t> loop_size;

  constexpr double kQuarter = std::numbers::pi / 4;
  while (true) {
    const std::size_t n = samples.size();
    loop_start.assign(n, 0);
    loop_size.assign(n, 0);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && samples[j].path == samples[i].path && samples[j].loop == samples[i].loop) ++j;
      for (std::size_t k = i; k < j; ++k) {
        loop_start[k] = i;
        loop_size[k] = j - i;
      }
      i = j;
    }
    auto seq_adjacent = [&](std::size_t a, std::size_t b) {
      if (loop_start[a] != loop_start[b]) return false;
      const std::size_t m = loop_size[a];
      const std::size_t d = a > b ? a - b : b - a;
      return std::min(d, m - d) <= 2;
    };

    std::vector<Vec2> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = samples[i].pos;
    PointGrid grid(pos, tau);
    std::vector<std::size_t> best(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      double bd = std::numeric_limits<double>::infinity();
      grid.for_each_within(pos[i], tau, [&](std::size_t j) {
        if (j == i || seq_adjacent(i, j)) return;
        const double d = distance(pos[i], pos[j]);
        if (!(d < tau)) return;
        if (undirected_diff(samples[i].slope, samples[j].slope) >= kQuarter) return;
        if (d > 0) {
          const double dir = direction(pos[i], pos[j]);
          if (undirected_diff(dir, samples[i].slope) <= kQuarter || undirected_diff(dir, samples[j].slope) <= kQuarter)
            return;
        }
        if (d < bd || (d == bd && j < best[i])) {
          bd = d;
          best[i] = j;
        }
      });
    }
    std::vector<std::uint8_t> removed(n, 0);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = best[i];
      if (j >= n || j < i || best[j] != i) continue;
      auto& keep = samples[i];
      const auto& drop = samples[j];
      keep.pos = lerp(keep.pos, drop.pos, 0.5);
      keep.slope = undirected_mean({keep.slope, drop.slope}, keep.slope);
      keep.merged = 1;
      removed[j] = 1;
      changed = true;
    }
    if (!changed) break;
    std::size_t w = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (!removed[i]) samples[w++] = samples[i];
    samples.resize(w);
  }

  std::vector<SampledPath> out(paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p) {
    out[p].path_id = paths[p].path_id;
    out[p].loops.resize(paths[p].loops.size());
    for (std::size_t l = 0; l < paths[p].loops.size(); ++l) {
      out[p].loops[l].closed = paths[p].loops[l].closed;
      out[p].loops[l].degenerate = paths[p].loops[l].degenerate;
      out[p].loops[l].length = paths[p].loops[l].length;
    }
  }
  for (const auto& s : samples) {
    auto& loop = out[s.path].loops[s.loop];
    loop.points.push_back(s.pos);
    loop.slopes.push_back(s.slope);
    loop.merged.push_back(s.merged);
  }
  return out;
}

}  // namespace ossr
