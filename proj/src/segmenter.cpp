#include "ossr/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "ossr/error.hpp"
#include "ossr/spatial.hpp"

namespace ossr {

std::string_view to_string(RegionOrigin origin) {
  switch (origin) {
    case RegionOrigin::Cluster: return "cluster";
    case RegionOrigin::Gap: return "gap";
    case RegionOrigin::Terminal: return "terminal";
  }
  return "cluster";
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Vec2 tangent(double slope) { return {std::cos(slope), std::sin(slope)}; }
Vec2 normal(double slope) { return {-std::sin(slope), std::cos(slope)}; }

struct FlatPoint {
  Vec2 pos;
  double slope;
  int path, loop, index;
};

std::vector<FlatPoint> flatten_paths(const std::vector<SampledPath>& paths) {
  std::vector<FlatPoint> out;
  for (const auto& p : paths)
    for (std::size_t l = 0; l < p.loops.size(); ++l)
      for (std::size_t i = 0; i < p.loops[l].size(); ++i)
        out.push_back({p.loops[l].points[i], p.loops[l].slopes[i], p.path_id, static_cast<int>(l), static_cast<int>(i)});
  return out;
}

// Lateral distance from p to the infinite axis through segment s.
double axis_distance(const LineSegmentRecord& s, Vec2 p) { return std::fabs(dot(p - s.a, normal(s.slope))); }

double endpoint_gap(const LineSegmentRecord& s, const BBox& box) {
  return std::min(box.distance_to(s.a), box.distance_to(s.b));
}

}  // namespace

double stroke_height(const std::vector<SampledPath>& paths, const SegmentParams& params) {
  struct Edge {
    Vec2 a, b;
    std::size_t ia, ib;  // flat ids of the endpoints
  };
  std::vector<Vec2> pts;
  std::vector<double> slopes;
  std::vector<Edge> edges;
  for (const auto& p : paths)
    for (const auto& loop : p.loops) {
      const std::size_t base = pts.size(), n = loop.size();
      for (std::size_t i = 0; i < n; ++i) {
        pts.push_back(loop.points[i]);
        slopes.push_back(loop.slopes[i]);
      }
      if (n < 2) continue;
      const std::size_t m = loop.closed ? n : n - 1;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = (i + 1) % n;
        edges.push_back({loop.points[i], loop.points[j], base + i, base + j});
      }
    }
  if (pts.empty()) return params.epsilon;
  std::vector<Vec2> mids(edges.size());
  double max_half = 0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    mids[e] = lerp(edges[e].a, edges[e].b, 0.5);
    max_half = std::max(max_half, distance(edges[e].a, edges[e].b) / 2);
  }
  const double R = params.search_radius;
  PointGrid grid(mids, std::max(R, 1.0));
  const double tol = params.angular_tolerance * kDeg;
  std::vector<double> hits;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2 p = pts[i];
    Vec2 dirs[6];
    int nd = 0;
    for (double phi : {-tol, 0.0, tol}) {
      const Vec2 d = rotate(normal(slopes[i]), phi);
      dirs[nd++] = d;
      dirs[nd++] = d * -1.0;
    }
    double best = std::numeric_limits<double>::infinity();
    grid.for_each_within(p, R + max_half, [&](std::size_t e) {
      const Edge& ed = edges[e];
      if (ed.ia == i || ed.ib == i) return;
      const Vec2 ev = ed.b - ed.a, ap = ed.a - p;
      for (int k = 0; k < nd; ++k) {
        const double den = cross(dirs[k], ev);
        if (std::fabs(den) < 1e-12) continue;
        const double s = cross(ap, ev) / den;
        const double u = cross(ap, dirs[k]) / den;
        if (u < 0 || u > 1 || s <= 0.5 || s > R) continue;
        best = std::min(best, s);
      }
    });
    if (std::isfinite(best)) hits.push_back(best);
  }
  if (hits.empty()) return params.epsilon;
  std::sort(hits.begin(), hits.end());
  const auto k = static_cast<std::size_t>(std::floor(params.stroke_quantile * static_cast<double>(hits.size() - 1)));
  return std::max(params.epsilon, params.beta * hits[k]);
}

std::vector<OrientedPoint> classify_line_points(const std::vector<SampledPath>& paths, double t,
                                                const SegmentParams& params) {
  const auto flat = flatten_paths(paths);
  std::vector<OrientedPoint> out;
  out.reserve(flat.size());
  std::vector<Vec2> pos;
  pos.reserve(flat.size());
  for (const auto& f : flat) pos.push_back(f.pos);
  for (const auto& p : paths)
    for (std::size_t l = 0; l < p.loops.size(); ++l)
      for (std::size_t i = 0; i < p.loops[l].size(); ++i) {
        OrientedPoint op;
        op.position = p.loops[l].points[i];
        op.slope = p.loops[l].slopes[i];
        op.path_id = p.path_id;
        op.loop_id = static_cast<int>(l);
        op.index = static_cast<int>(i);
        op.merged = p.loops[l].merged[i] != 0;
        out.push_back(op);
      }
  if (out.empty()) return out;
  const double reach = params.m_windows * params.sampling.delta;
  const double radius = std::hypot(reach, t);
  PointGrid grid(pos, std::max(radius, 1.0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec2 u = tangent(out[i].slope), n = normal(out[i].slope);
    bool occupied = false;
    grid.for_each_within(pos[i], radius, [&](std::size_t j) {
      if (occupied || j == i) return;
      const Vec2 d = pos[j] - pos[i];
      const double a = std::fabs(dot(d, u)), b = std::fabs(dot(d, n));
      if (a <= reach && b > params.axis_tolerance && b <= t) occupied = true;
    });
    out[i].label = occupied ? PointLabel::SymbolCandidate : PointLabel::Line;
  }
  return out;
}

std::vector<Junction> detect_junctions(const SampledPath& path, const SegmentParams& params) {
  std::vector<Vec2> pos;
  std::vector<double> slope;
  std::vector<std::size_t> prev, next;  // sequence neighbours, or npos
  constexpr auto npos = std::numeric_limits<std::size_t>::max();
  for (const auto& loop : path.loops) {
    const std::size_t base = pos.size(), n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
      pos.push_back(loop.points[i]);
      slope.push_back(loop.slopes[i]);
      if (n < 3) {
        prev.push_back(npos);
        next.push_back(npos);
      } else if (loop.closed) {
        prev.push_back(base + (i + n - 1) % n);
        next.push_back(base + (i + 1) % n);
      } else {
        prev.push_back(i == 0 ? npos : base + i - 1);
        next.push_back(i + 1 == n ? npos : base + i + 1);
      }
    }
  }
  std::vector<Junction> out;
  if (pos.empty()) return out;
  const double delta = params.sampling.delta;
  const double near = 1.5 * delta;
  // Branches are counted on a ring so the unmerged points of a stroke's own
  // end cap, which sit inside one interval of the tip, do not count.
  const double ring_in = delta, ring_out = 3 * delta;
  PointGrid grid(pos, ring_out);
  std::vector<std::size_t> hits;
  std::vector<double> angles;
  auto branches_at = [&](Vec2 c) {
    angles.clear();
    grid.for_each_within(c, ring_out, [&](std::size_t j) {
      const Vec2 d = pos[j] - c;
      if (norm(d) >= ring_in) angles.push_back(std::atan2(d.y, d.x));
    });
    std::sort(angles.begin(), angles.end());
    int branches = 0;
    for (std::size_t k = 0; k < angles.size(); ++k) {
      const double gap = k + 1 < angles.size() ? angles[k + 1] - angles[k]
                                               : angles.front() + 2 * std::numbers::pi - angles[k];
      if (gap >= std::numbers::pi / 4) ++branches;
    }
    return !angles.empty() && branches == 0 ? 1 : branches;
  };
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const int branches = branches_at(pos[i]);
    bool turn = false;
    if (branches >= 2 && prev[i] != npos && next[i] != npos && distance(pos[prev[i]], pos[i]) <= near &&
        distance(pos[next[i]], pos[i]) <= near)
      turn = undirected_diff(slope[prev[i]], slope[next[i]]) > params.terminal_turn * kDeg;
    if (branches > 2 || turn) hits.push_back(i);
  }
  if (hits.empty()) return out;
  std::vector<Vec2> hp;
  for (auto h : hits) hp.push_back(pos[h]);
  DisjointSets ds(hits.size());
  PointGrid hgrid(hp, 2 * delta);
  for (std::size_t a = 0; a < hits.size(); ++a)
    hgrid.for_each_within(hp[a], 2 * delta, [&](std::size_t b) { ds.unite(a, b); });
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t a = 0; a < hits.size(); ++a) {
    auto [it, inserted] = slot.try_emplace(ds.find(a), out.size());
    if (inserted) out.emplace_back();
    auto& j = out[it->second];
    j.members.push_back(hits[a]);
  }
  // A crossing has no sample at its centre, so the degree is read there.
  for (auto& j : out) {
    Vec2 c;
    for (auto m : j.members) c += pos[m];
    j.center = c / static_cast<double>(j.members.size());
    j.degree = branches_at(j.center);
  }
  return out;
}

namespace {

void fit_chain(const std::vector<OrientedPoint>& points, std::vector<std::size_t> members, double t,
               std::vector<LineSegmentRecord>& out) {
  if (members.size() < 2) return;
  Vec2 mean;
  for (auto m : members) mean += points[m].position;
  mean = mean / static_cast<double>(members.size());
  double sxx = 0, syy = 0, sxy = 0;
  for (auto m : members) {
    const Vec2 d = points[m].position - mean;
    sxx += d.x * d.x;
    syy += d.y * d.y;
    sxy += d.x * d.y;
  }
  const double angle = 0.5 * std::atan2(2 * sxy, sxx - syy);
  const Vec2 u = tangent(angle), n = normal(angle);
  std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
    const double pa = dot(points[a].position - mean, u), pb = dot(points[b].position - mean, u);
    return pa != pb ? pa < pb : a < b;
  });
  double worst = 0;
  std::size_t worst_at = 0;
  for (std::size_t k = 0; k < members.size(); ++k) {
    const double dev = std::fabs(dot(points[members[k]].position - mean, n));
    if (dev > worst) {
      worst = dev;
      worst_at = k;
    }
  }
  if (worst > t / 2 && members.size() >= 4) {
    const std::size_t cut = std::clamp<std::size_t>(worst_at, 1, members.size() - 1);
    fit_chain(points, {members.begin(), members.begin() + static_cast<long>(cut)}, t, out);
    fit_chain(points, {members.begin() + static_cast<long>(cut), members.end()}, t, out);
    return;
  }
  LineSegmentRecord rec;
  rec.slope = fold_undirected(angle);
  rec.a = mean + u * dot(points[members.front()].position - mean, u);
  rec.b = mean + u * dot(points[members.back()].position - mean, u);
  if (rec.length() <= 0) return;
  std::sort(members.begin(), members.end());
  rec.members = std::move(members);
  out.push_back(std::move(rec));
}

}  // namespace

std::vector<LineSegmentRecord> extract_line_segments(const std::vector<OrientedPoint>& points, double t,
                                                     const SegmentParams& params) {
  std::vector<std::size_t> ids;
  std::vector<Vec2> pos;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].label == PointLabel::Line) {
      ids.push_back(i);
      pos.push_back(points[i].position);
    }
  std::vector<LineSegmentRecord> out;
  if (ids.empty()) return out;
  const double link = 1.5 * params.sampling.delta;
  PointGrid grid(pos, link);
  DisjointSets ds(ids.size());
  for (std::size_t a = 0; a < ids.size(); ++a)
    grid.for_each_within(pos[a], link, [&](std::size_t b) {
      if (undirected_diff(points[ids[a]].slope, points[ids[b]].slope) < 20 * kDeg) ds.unite(a, b);
    });
  std::map<std::size_t, std::vector<std::size_t>> chains;
  for (std::size_t a = 0; a < ids.size(); ++a) chains[ds.find(a)].push_back(ids[a]);
  for (auto& [root, members] : chains) fit_chain(points, std::move(members), t, out);
  return out;
}

namespace {

struct Cluster {
  std::vector<std::size_t> members;  // ascending point indices
  BBox box;
};

std::vector<Cluster> cluster_candidates(const std::vector<OrientedPoint>& points, double link) {
  std::vector<std::size_t> ids;
  std::vector<Vec2> pos;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].label == PointLabel::SymbolCandidate) {
      ids.push_back(i);
      pos.push_back(points[i].position);
    }
  std::vector<Cluster> out;
  if (ids.empty()) return out;
  PointGrid grid(pos, link);
  DisjointSets ds(ids.size());
  for (std::size_t a = 0; a < ids.size(); ++a) grid.for_each_within(pos[a], link, [&](std::size_t b) { ds.unite(a, b); });
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t a = 0; a < ids.size(); ++a) {
    auto [it, inserted] = slot.try_emplace(ds.find(a), out.size());
    if (inserted) out.emplace_back();
    out[it->second].members.push_back(ids[a]);
    out[it->second].box.expand(pos[a]);
  }
  return out;
}

}  // namespace

std::vector<SymbolRegion> extract_symbol_regions(std::vector<OrientedPoint>& points,
                                                 std::vector<LineSegmentRecord>& lines, double t,
                                                 const SegmentParams& params) {
  const double delta = params.sampling.delta;
  const double near = 2 * delta;
  auto clusters = cluster_candidates(points, near);

  // Short straight runs inside a symbol (e.g. the flat side of a square)
  // belong to that symbol rather than to the pipeline.
  const double short_run = 2 * params.m_windows * delta;
  std::vector<std::uint8_t> line_removed(lines.size(), 0);
  for (std::size_t s = 0; s < lines.size(); ++s) {
    if (lines[s].length() >= short_run) continue;
    for (auto& c : clusters) {
      const BBox zone = c.box.inflated(near);
      const bool inside = std::all_of(lines[s].members.begin(), lines[s].members.end(),
                                      [&](std::size_t m) { return zone.contains(points[m].position); });
      if (!inside) continue;
      for (auto m : lines[s].members) {
        points[m].label = PointLabel::SymbolCandidate;
        c.members.push_back(m);
      }
      std::sort(c.members.begin(), c.members.end());
      line_removed[s] = 1;
      break;
    }
  }
  {
    std::vector<LineSegmentRecord> kept;
    for (std::size_t s = 0; s < lines.size(); ++s)
      if (!line_removed[s]) kept.push_back(std::move(lines[s]));
    lines = std::move(kept);
  }

  std::map<std::pair<int, int>, int> loop_key;
  auto key_of = [&](const OrientedPoint& p) {
    auto [it, inserted] = loop_key.try_emplace({p.path_id, p.loop_id}, static_cast<int>(loop_key.size()));
    return it->second;
  };
  for (const auto& p : points) key_of(p);

  auto count_incident = [&](const BBox& box) {
    int n = 0;
    for (const auto& s : lines)
      if (endpoint_gap(s, box) <= near) ++n;
    return n;
  };

  std::vector<SymbolRegion> regions;
  for (const auto& c : clusters) {
    std::vector<const LineSegmentRecord*> incident;
    for (const auto& s : lines)
      if (endpoint_gap(s, c.box) <= near) incident.push_back(&s);
    BBox core;
    std::size_t unexplained = 0;
    for (auto m : c.members) {
      const Vec2 p = points[m].position;
      const bool on_axis = std::any_of(incident.begin(), incident.end(), [&](const LineSegmentRecord* s) {
        return axis_distance(*s, p) <= params.axis_tolerance;
      });
      if (!on_axis) {
        ++unexplained;
        core.expand(p);
      }
    }
    // Corners, tees and crossings of the pipeline lie entirely on their own axes.
    if (unexplained < static_cast<std::size_t>(params.min_unexplained)) continue;
    const BBox keep = core.inflated(params.axis_tolerance);
    SymbolRegion r;
    r.origin = RegionOrigin::Cluster;
    for (auto m : c.members)
      if (keep.contains(points[m].position)) {
        r.points.push_back(points[m].position);
        r.loop_keys.push_back(key_of(points[m]));
        r.bbox.expand(points[m].position);
      }
    // The candidate stubs leading into the symbol are trimmed from its box,
    // so lines are counted against the whole cluster.
    r.incident_lines = static_cast<int>(incident.size());
    regions.push_back(std::move(r));
  }

  // Gap regions between collinear line pieces with nothing drawn in between.
  auto occupied = [&](const BBox& box, std::size_t s0, std::size_t s1) {
    for (const auto& c : clusters)
      if (c.box.intersects(box))
        for (auto m : c.members)
          if (box.contains(points[m].position)) return true;
    for (std::size_t s = 0; s < lines.size(); ++s) {
      if (s == s0 || s == s1) continue;
      for (auto m : lines[s].members)
        if (box.contains(points[m].position)) return true;
    }
    return false;
  };
  struct GapCandidate {
    double gap;
    std::size_t s0, s1;
    Vec2 e0, e1;
  };
  std::vector<GapCandidate> gaps;
  for (std::size_t i = 0; i < lines.size(); ++i)
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const auto& A = lines[i];
      const auto& B = lines[j];
      if (undirected_diff(A.slope, B.slope) >= params.collinear_tolerance * kDeg) continue;
      double best = std::numeric_limits<double>::infinity();
      Vec2 ea, eb, oa, ob;
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
          const Vec2 pa = x ? A.b : A.a, pb = y ? B.b : B.a;
          if (distance(pa, pb) < best) {
            best = distance(pa, pb);
            ea = pa;
            eb = pb;
            oa = x ? A.a : A.b;
            ob = y ? B.a : B.b;
          }
        }
      if (best <= near || best > params.gap_max) continue;
      if (axis_distance(A, eb) >= t || axis_distance(B, ea) >= t) continue;
      // The pieces must continue each other, not overlap.
      if (dot(eb - ea, ea - oa) <= 0 || dot(ea - eb, eb - ob) <= 0) continue;
      gaps.push_back({best, i, j, ea, eb});
    }
  std::sort(gaps.begin(), gaps.end(), [](const GapCandidate& a, const GapCandidate& b) {
    return a.gap != b.gap ? a.gap < b.gap : std::tie(a.s0, a.s1) < std::tie(b.s0, b.s1);
  });
  std::vector<std::uint8_t> end_used(lines.size() * 2, 0);
  auto end_slot = [&](std::size_t s, Vec2 e) { return 2 * s + (e == lines[s].a ? 0 : 1); };
  std::vector<BBox> gap_boxes;
  for (const auto& g : gaps) {
    const std::size_t k0 = end_slot(g.s0, g.e0), k1 = end_slot(g.s1, g.e1);
    if (end_used[k0] || end_used[k1]) continue;
    BBox box;
    box.expand(g.e0);
    box.expand(g.e1);
    const Vec2 c = box.center();
    const double hw = std::max(box.width(), 2 * t) / 2, hh = std::max(box.height(), 2 * t) / 2;
    box = {c.x - hw, c.y - hh, c.x + hw, c.y + hh};
    if (occupied(box, g.s0, g.s1)) continue;
    end_used[k0] = end_used[k1] = 1;
    SymbolRegion r;
    r.origin = RegionOrigin::Gap;
    r.points = {g.e0, g.e1};
    r.loop_keys = {-1, -1};
    r.bbox = box;
    r.incident_lines = count_incident(box);
    gap_boxes.push_back(box);
    regions.push_back(std::move(r));
  }

  // Terminal regions: a line end that turns sharply without touching anything else.
  std::vector<std::uint8_t> in_line(points.size(), 0), in_cluster(points.size(), 0);
  for (const auto& s : lines)
    for (auto m : s.members) in_line[m] = 1;
  for (const auto& c : clusters)
    for (auto m : c.members) in_cluster[m] = 1;
  std::vector<Vec2> all_pos(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) all_pos[i] = points[i].position;
  PointGrid all_grid(all_pos, near);
  for (std::size_t s = 0; s < lines.size(); ++s)
    for (int side = 0; side < 2; ++side) {
      if (end_used[2 * s + side]) continue;
      const Vec2 e = side ? lines[s].b : lines[s].a;
      const Vec2 other = side ? lines[s].a : lines[s].b;
      bool adjacent = false;
      for (const auto& c : clusters)
        if (c.box.distance_to(e) <= near) adjacent = true;
      for (const auto& b : gap_boxes)
        if (b.distance_to(e) <= near) adjacent = true;
      std::vector<std::size_t> loose;
      all_grid.for_each_within(e, near, [&](std::size_t m) {
        if (in_line[m] && !std::binary_search(lines[s].members.begin(), lines[s].members.end(), m)) adjacent = true;
        if (!in_line[m] && !in_cluster[m]) loose.push_back(m);
      });
      if (adjacent || loose.size() < 2) continue;
      double turn = 0;
      for (auto m : loose) turn = std::max(turn, undirected_diff(points[m].slope, lines[s].slope));
      if (turn <= params.terminal_turn * kDeg) continue;
      const Vec2 out_dir = (e - other) / std::max(distance(e, other), 1e-12);
      const Vec2 c = e + out_dir * t;
      SymbolRegion r;
      r.origin = RegionOrigin::Terminal;
      std::sort(loose.begin(), loose.end());
      for (auto m : loose) {
        r.points.push_back(points[m].position);
        r.loop_keys.push_back(key_of(points[m]));
      }
      r.bbox = {c.x - t, c.y - t, c.x + t, c.y + t};
      r.incident_lines = count_incident(r.bbox);
      regions.push_back(std::move(r));
    }

  std::stable_sort(regions.begin(), regions.end(), [](const SymbolRegion& a, const SymbolRegion& b) {
    return std::tie(a.bbox.y0, a.bbox.x0, a.bbox.y1, a.bbox.x1) < std::tie(b.bbox.y0, b.bbox.x0, b.bbox.y1, b.bbox.x1);
  });
  for (std::size_t i = 0; i < regions.size(); ++i) regions[i].region_id = static_cast<int>(i);
  return regions;
}

BBox SegmentResult::image_bbox(const SymbolRegion& r) const {
  return {r.bbox.x0 / scale, r.bbox.y0 / scale, r.bbox.x1 / scale, r.bbox.y1 / scale};
}

SegmentResult segment(const VectorPathSet& traced, const SegmentParams& params) {
  SegmentResult res;
  const auto normalized = correct_rotation(normalize_scale(traced, params.sampling.target_width));
  res.scale = params.sampling.target_width / traced.width;
  res.width = normalized.width;
  res.height = normalized.height;
  res.sampled = sample_paths(normalized, params.sampling.delta);
  res.t = stroke_height(res.sampled, params);
  res.merged = merge_adjacent(res.sampled, params.sampling.tau_merge);
  res.points = classify_line_points(res.merged, res.t, params);
  res.lines = extract_line_segments(res.points, res.t, params);
  res.regions = extract_symbol_regions(res.points, res.lines, res.t, params);
  return res;
}

}  // namespace ossr
