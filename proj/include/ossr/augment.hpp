#pragma once

#include <cstdint>

#include "ossr/features.hpp"

namespace ossr {

/// Ranges are symmetric half-widths unless stated; zero widths give the identity.
struct AugmentPolicy {
  double rotation_deg = 20.0;
  double scale_min = 0.9;
  double scale_max = 1.1;
  double shear = 0.05;
  int window = 6;              // sequential points sharing one local perturbation
  double window_jitter = 0.01;  // per-entry deviation of the local matrix from identity
};

/// One global affine about the centroid (rotation * scale * shear), then a
/// small affine per window of sequential points about the window centroid.
/// Run structure is preserved.
PointCloud augment(const PointCloud& cloud, const AugmentPolicy& policy, std::uint64_t seed);

/// Rotates about the bbox centre by quarter_turns * 90 degrees, clockwise in
/// image coordinates (y down).
PointCloud rotate_quarter(const PointCloud& cloud, int quarter_turns);

}  // namespace ossr
