#pragma once

#include <array>
#include <vector>

#include "ossr/geometry.hpp"
#include "ossr/raster.hpp"

namespace ossr {

enum class TurnPolicy { Black, White, Left, Right, Minority, Majority };

enum class SegmentKind { Line, Bezier };

/// A line (p[0] -> p[3]) or a cubic bezier with controls p[1], p[2].
/// For lines p[1], p[2] are unused and equal to the endpoints.
struct Segment {
  SegmentKind kind = SegmentKind::Line;
  std::array<Vec2, 4> p{};

  Vec2 start() const { return p[0]; }
  Vec2 end() const { return p[3]; }
  Vec2 eval(double t) const;

  static Segment line(Vec2 a, Vec2 b) { return {SegmentKind::Line, {a, a, b, b}}; }
  static Segment bezier(Vec2 a, Vec2 c1, Vec2 c2, Vec2 b) { return {SegmentKind::Bezier, {a, c1, c2, b}}; }
};

enum class LoopOrientation { Outer, Hole };

struct Loop {
  std::vector<Segment> segments;
  LoopOrientation orientation = LoopOrientation::Outer;
  double signed_area = 0.0;  // positive for outer loops, negative for holes
};

/// All loops (outer boundaries and holes) of one connected dark component.
struct Path {
  std::vector<Loop> loops;
};

struct VectorPathSet {
  int width = 0;   // canvas the coordinates live in
  int height = 0;
  std::vector<Path> paths;

  std::size_t loop_count() const;
};

/// Closed boundary walk along pixel corners; consecutive points differ by one
/// unit step. Outer contours have positive shoelace area, holes negative.
struct PixelContour {
  std::vector<std::array<int, 2>> points;
  LoopOrientation orientation = LoopOrientation::Outer;
  long area = 0;  // enclosed pixel count (absolute)
};

struct ContourGroup {
  std::vector<PixelContour> contours;  // outer boundaries first, then holes
};

struct TraceParams {
  TurnPolicy turn_policy = TurnPolicy::Minority;
  int turdsize = 2;           // contours enclosing <= turdsize pixels are dropped
  double alphamax = 1.0;      // corner threshold
  bool opticurve = true;
  double opttolerance = 0.2;
};

std::vector<ContourGroup> decompose_paths(const BinaryImage& img, TurnPolicy turn_policy = TurnPolicy::Minority,
                                          int turdsize = 2);

Loop fit_curves(const PixelContour& contour, double alphamax = 1.0, bool opticurve = true,
                double opttolerance = 0.2);

VectorPathSet trace(const BinaryImage& img, const TraceParams& params = {});

/// Even-odd fill of every loop, sampled at pixel centres.
BinaryImage render(const VectorPathSet& paths, int width, int height);

/// Flattens one loop into a closed polyline (last point != first point).
std::vector<Vec2> flatten(const Loop& loop, double tolerance = 0.05);

double signed_area(std::span<const Vec2> polygon);

}  // namespace ossr
