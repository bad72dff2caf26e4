#pragma once

#include <string_view>
#include <vector>

#include "ossr/geometry.hpp"
#include "ossr/sampler.hpp"
#include "ossr/tracer.hpp"

namespace ossr {

enum class PointLabel { Line, SymbolCandidate };

struct OrientedPoint {
  Vec2 position;
  double slope = 0.0;  // (-pi/2, pi/2]
  PointLabel label = PointLabel::Line;
  int path_id = 0;
  int loop_id = 0;
  int index = 0;  // position within the (merged) loop
  bool merged = false;
};

struct LineSegmentRecord {
  Vec2 a, b;  // endpoints along the fitted axis
  double slope = 0.0;
  std::vector<std::size_t> members;  // indices into the OrientedPoint list

  double length() const { return distance(a, b); }
};

enum class RegionOrigin { Cluster, Gap, Terminal };
std::string_view to_string(RegionOrigin origin);

struct SymbolRegion {
  int region_id = 0;
  std::vector<Vec2> points;
  std::vector<int> loop_keys;  // source loop of each point; equal keys form ordered runs
  BBox bbox;
  int incident_lines = 0;
  RegionOrigin origin = RegionOrigin::Cluster;
};

struct Junction {
  std::vector<std::size_t> members;  // flat indices into the path's points
  Vec2 center;
  int degree = 0;  // branches leaving a ring around the centre
};

struct SegmentParams {
  SampleParams sampling;
  double epsilon = 10.0;            // lower bound on t
  double beta = 1.5;                // t = max(epsilon, beta * stroke)
  double search_radius = 60.0;      // orthogonal probe length
  double angular_tolerance = 15.0;  // degrees; probes fan out by this much
  double stroke_quantile = 0.5;     // robust statistic over probe hits
  int m_windows = 5;
  double axis_tolerance = 3.5;      // lateral slack for points on a line's own axis
  double gap_max = 120.0;
  double collinear_tolerance = 5.0;  // degrees
  double terminal_turn = 30.0;       // degrees
  int min_unexplained = 4;           // cluster points off every incident axis
};

/// Stroke height over the sampled (pre-merge) points.
double stroke_height(const std::vector<SampledPath>& paths, const SegmentParams& params = {});

/// Windowed orthogonal-occupancy test on merged samples.
std::vector<OrientedPoint> classify_line_points(const std::vector<SampledPath>& paths, double t,
                                                const SegmentParams& params = {});

/// Branch points (local degree > 2) and sharp turns, clustered at 2*delta.
std::vector<Junction> detect_junctions(const SampledPath& path, const SegmentParams& params = {});

std::vector<LineSegmentRecord> extract_line_segments(const std::vector<OrientedPoint>& points, double t,
                                                     const SegmentParams& params = {});

std::vector<SymbolRegion> extract_symbol_regions(std::vector<OrientedPoint>& points,
                                                 std::vector<LineSegmentRecord>& lines, double t,
                                                 const SegmentParams& params = {});

struct SegmentResult {
  double scale = 1.0;  // normalized = image * scale
  int width = 0, height = 0;
  double t = 0.0;
  std::vector<SampledPath> sampled;  // before merging
  std::vector<SampledPath> merged;
  std::vector<OrientedPoint> points;
  std::vector<LineSegmentRecord> lines;
  std::vector<SymbolRegion> regions;

  BBox image_bbox(const SymbolRegion& r) const;
};

/// Normalize, sample, merge, classify and extract regions.
SegmentResult segment(const VectorPathSet& traced, const SegmentParams& params = {});

}  // namespace ossr
