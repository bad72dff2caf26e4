#pragma once

#include <cstdint>
#include <vector>

#include "ossr/geometry.hpp"
#include "ossr/tracer.hpp"

namespace ossr {

/// Fixed-interval samples of one traced loop. `slopes` are undirected
/// tangent angles in (-pi/2, pi/2]; `merged` marks points that replaced a
/// pair of facing samples.
struct SampledLoop {
  std::vector<Vec2> points;
  std::vector<double> slopes;
  std::vector<std::uint8_t> merged;
  bool closed = true;
  bool degenerate = false;  // loop shorter than two intervals
  double length = 0.0;

  std::size_t size() const { return points.size(); }
};

struct SampledPath {
  int path_id = 0;
  std::vector<SampledLoop> loops;

  std::size_t point_count() const;
};

struct SampleParams {
  double target_width = 4000.0;
  double delta = 5.0;      // sampling interval
  double tau_merge = 5.0;  // facing samples closer than this are merged
};

/// Scales every coordinate by target_width / paths.width.
VectorPathSet normalize_scale(const VectorPathSet& paths, double target_width = 4000.0);

/// Rotation correction is not estimated; kept as an explicit identity step.
inline VectorPathSet correct_rotation(const VectorPathSet& paths) { return paths; }

/// Arc length with beziers subdivided until flat to `tolerance`.
double loop_length(const Loop& loop, double tolerance = 1e-3);

/// Samples round(L/delta) points at uniform arc spacing starting at the loop
/// start. Loops shorter than 2*delta yield two points (start and half-way) and
/// are flagged degenerate.
SampledLoop sample_loop(const Loop& loop, double delta);

/// Samples every loop of every path and annotates slopes.
std::vector<SampledPath> sample_paths(const VectorPathSet& paths, double delta);

/// Undirected circular mean of the three chord directions around point i.
/// Neighbours wrap for closed loops and are clamped for open ones.
double point_slope(const SampledLoop& loop, std::size_t i);

/// Replaces mutually nearest samples on facing contour edges (closer than
/// tau, strictly) by their midpoint, kept in the lower (path, loop, index)
/// slot. Repeats to a fixed point, so the operation is idempotent.
std::vector<SampledPath> merge_adjacent(const std::vector<SampledPath>& paths, double tau);

}  // namespace ossr
