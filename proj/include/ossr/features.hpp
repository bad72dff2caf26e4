#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "ossr/geometry.hpp"
#include "ossr/segmenter.hpp"

namespace ossr {

inline constexpr int kCloudPoints = 1024;
inline constexpr int kFeatureDim = 9;
inline constexpr int kHuWindow = 6;

/// Seven Hu invariants of a point window. Each point carries mass l^2 where
/// l is the mean consecutive spacing, so the result is scale invariant; a
/// window of coincident points yields zeros. Moment parts at rounding-noise
/// level (below 1e-10 in normalized units) are taken as exactly zero.
std::array<double, 7> hu_moments(std::span<const Vec2> window);

/// Ordered points split into runs (contiguous pieces of one loop).
struct PointCloud {
  std::vector<Vec2> points;
  std::vector<int> run;          // run index of every point
  std::vector<double> arc;       // arc position within its run
  std::vector<std::uint8_t> run_closed;

  std::size_t size() const { return points.size(); }
};

/// Splits a region into runs and redistributes n points over them in
/// proportion to run length (largest-remainder quotas), uniformly in arc.
PointCloud resample_region(const SymbolRegion& region, int n = kCloudPoints);

/// Largest-remainder apportionment of n over the given weights.
std::vector<int> apportion(std::span<const double> weights, int n);

struct FeatureMatrix {
  Eigen::MatrixXd values;  // n x 9: x, y, then signed-log h0..h6
  std::vector<int> run;
  std::vector<double> arc;

  int rows() const { return static_cast<int>(values.rows()); }
};

/// sgn(h) * log10(1 + |h| / 1e-30) / 30
double signed_log(double h);

FeatureMatrix featurize(const PointCloud& cloud);
FeatureMatrix featurize(const SymbolRegion& region);

/// 16-byte header {magic "OSFM", version, rows, cols} + little-endian float32.
void write_features(const FeatureMatrix& f, const std::filesystem::path& path);
FeatureMatrix read_features(const std::filesystem::path& path);

}  // namespace ossr
