#include "ossr/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "ossr/error.hpp"

namespace ossr {

std::array<double, 7> hu_moments(std::span<const Vec2> w) {
  std::array<double, 7> h{};
  const std::size_t n = w.size();
  if (n == 0) return h;
  double spacing = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) spacing += distance(w[i], w[i + 1]);
  if (n > 1) spacing /= static_cast<double>(n - 1);
  if (spacing <= 0) return h;
  const double mass = spacing * spacing;

  Vec2 c;
  for (auto p : w) c += p;
  c = c / static_cast<double>(n);
  double m20 = 0, m02 = 0, m11 = 0, m30 = 0, m03 = 0, m21 = 0, m12 = 0;
  for (auto p : w) {
    const double x = p.x - c.x, y = p.y - c.y;
    m20 += x * x;
    m02 += y * y;
    m11 += x * y;
    m30 += x * x * x;
    m03 += y * y * y;
    m21 += x * x * y;
    m12 += x * y * y;
  }
  const double mu00 = mass * static_cast<double>(n);
  const double k2 = mass / std::pow(mu00, 2.0), k3 = mass / std::pow(mu00, 2.5);
  double n20 = m20 * k2, n02 = m02 * k2, n11 = m11 * k2;
  double n30 = m30 * k3, n03 = m03 * k3, n21 = m21 * k3, n12 = m12 * k3;
  // Symmetric windows (straight runs, regular arcs) have exactly vanishing
  // parts that come out at rounding level, and the signed-log map would blow
  // that noise up into features. Both tests are rotation invariant.
  constexpr double kNoise = 1e-20;
  if (n30 * n30 + 3 * n21 * n21 + 3 * n12 * n12 + n03 * n03 < kNoise) n30 = n03 = n21 = n12 = 0;
  if ((n20 - n02) * (n20 - n02) + 4 * n11 * n11 < kNoise) {
    n20 = n02 = (n20 + n02) / 2;
    n11 = 0;
  }

  const double a = n30 + n12, b = n21 + n03;
  const double p = n30 - 3 * n12, q = 3 * n21 - n03;
  h[0] = n20 + n02;
  h[1] = (n20 - n02) * (n20 - n02) + 4 * n11 * n11;
  h[2] = p * p + q * q;
  h[3] = a * a + b * b;
  h[4] = p * a * (a * a - 3 * b * b) + q * b * (3 * a * a - b * b);
  h[5] = (n20 - n02) * (a * a - b * b) + 4 * n11 * a * b;
  h[6] = q * a * (a * a - 3 * b * b) - p * b * (3 * a * a - b * b);
  return h;
}

double signed_log(double h) {
  if (h == 0) return 0.0;
  return std::copysign(std::log10(1.0 + std::fabs(h) / 1e-30) / 30.0, h);
}

std::vector<int> apportion(std::span<const double> weights, int n) {
  std::vector<int> q(weights.size(), 0);
  if (weights.empty() || n <= 0) return q;
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<double> share(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    share[i] = total > 0 ? n * weights[i] / total : static_cast<double>(n) / static_cast<double>(weights.size());
  int assigned = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = static_cast<int>(std::floor(share[i]));
    assigned += q[i];
  }
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return share[a] - q[a] > share[b] - q[b];
  });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % order.size(), ++assigned) ++q[order[k]];
  return q;
}

namespace {

struct Run {
  int key = -1;
  std::vector<Vec2> pts;
  bool closed = false;
  double length = 0;
};

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  const auto mid = v.begin() + static_cast<long>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

// Breaks the ordered region points wherever the source loop changes or the
// spacing jumps well above the typical sampling step.
std::vector<Run> split_runs(const SymbolRegion& region) {
  const auto& pts = region.points;
  std::vector<double> steps;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    if (region.loop_keys[i] == region.loop_keys[i + 1]) steps.push_back(distance(pts[i], pts[i + 1]));
  const double link = 3.0 * median(steps);
  std::vector<Run> runs;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const bool fresh = i == 0 || region.loop_keys[i] != region.loop_keys[i - 1] || region.loop_keys[i] < 0 ||
                       distance(pts[i], pts[i - 1]) > link;
    if (fresh) {
      runs.emplace_back();
      runs.back().key = region.loop_keys[i];
    }
    runs.back().pts.push_back(pts[i]);
  }
  // A loop cut once in the middle still continues across its sampling
  // origin: join its last piece onto its first.
  for (std::size_t first = 0; first < runs.size();) {
    std::size_t last = first;
    while (last + 1 < runs.size() && runs[last + 1].key == runs[first].key) ++last;
    if (runs[first].key >= 0 && last != first && distance(runs[last].pts.back(), runs[first].pts.front()) <= link) {
      runs[last].pts.insert(runs[last].pts.end(), runs[first].pts.begin(), runs[first].pts.end());
      runs[first].pts = std::move(runs[last].pts);
      runs.erase(runs.begin() + static_cast<long>(last));
      --last;
    } else if (runs[first].key >= 0 && last == first && runs[first].pts.size() >= 3 &&
               distance(runs[first].pts.front(), runs[first].pts.back()) <= link) {
      runs[first].closed = true;
    }
    first = last + 1;
  }
  for (auto& run : runs) {
    for (std::size_t i = 0; i + 1 < run.pts.size(); ++i) run.length += distance(run.pts[i], run.pts[i + 1]);
    if (run.closed) run.length += distance(run.pts.back(), run.pts.front());
  }
  return runs;
}

Vec2 along(const Run& run, double s) {
  const std::size_t n = run.pts.size();
  const std::size_t edges = run.closed ? n : n - 1;
  for (std::size_t i = 0; i < edges; ++i) {
    const Vec2 a = run.pts[i], b = run.pts[(i + 1) % n];
    const double d = distance(a, b);
    if (s <= d || i + 1 == edges) return d > 0 ? lerp(a, b, std::clamp(s / d, 0.0, 1.0)) : a;
    s -= d;
  }
  return run.pts.front();
}

}  // namespace

PointCloud resample_region(const SymbolRegion& region, int n) {
  if (region.points.empty()) throw Error(ErrorCode::EmptyRegion, "region has no points");
  if (region.loop_keys.size() != region.points.size())
    throw Error(ErrorCode::ShapeMismatch, "loop keys do not match points");
  auto runs = split_runs(region);
  std::vector<double> lengths;
  for (const auto& r : runs) lengths.push_back(r.length);
  const auto quota = apportion(lengths, n);
  PointCloud cloud;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const int q = quota[r];
    if (q == 0) continue;
    const int id = static_cast<int>(cloud.run_closed.size());
    cloud.run_closed.push_back(runs[r].closed ? 1 : 0);
    const double L = runs[r].length;
    for (int k = 0; k < q; ++k) {
      double s = 0;
      if (runs[r].closed) s = L * k / q;
      else if (q > 1) s = L * k / (q - 1);
      cloud.points.push_back(runs[r].pts.size() > 1 ? along(runs[r], s) : runs[r].pts.front());
      cloud.run.push_back(id);
      cloud.arc.push_back(s);
    }
  }
  return cloud;
}

FeatureMatrix featurize(const PointCloud& cloud) {
  const std::size_t n = cloud.size();
  if (n == 0) throw Error(ErrorCode::EmptyRegion, "empty point cloud");
  FeatureMatrix f;
  f.values.setZero(static_cast<Eigen::Index>(n), kFeatureDim);
  f.run = cloud.run;
  f.arc = cloud.arc;

  const BBox box = BBox::of(cloud.points);
  const Vec2 c = box.center();
  const double half = std::max(box.width(), box.height()) / 2;
  std::vector<Vec2> norm_pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    norm_pts[i] = half > 0 ? (cloud.points[i] - c) / half : Vec2{};
    f.values(static_cast<Eigen::Index>(i), 0) = norm_pts[i].x;
    f.values(static_cast<Eigen::Index>(i), 1) = norm_pts[i].y;
  }

  std::vector<Vec2> window;
  for (std::size_t begin = 0; begin < n;) {
    std::size_t end = begin;
    while (end < n && cloud.run[end] == cloud.run[begin]) ++end;
    const std::size_t len = end - begin;
    const bool closed = cloud.run_closed[static_cast<std::size_t>(cloud.run[begin])] != 0;
    for (std::size_t i = 0; i < len; ++i) {
      window.clear();
      if (len <= static_cast<std::size_t>(kHuWindow)) {
        for (std::size_t k = 0; k < len; ++k) window.push_back(norm_pts[begin + k]);
      } else if (closed) {
        for (long k = -2; k <= 3; ++k)
          window.push_back(norm_pts[begin + static_cast<std::size_t>((static_cast<long>(i + len) + k) % static_cast<long>(len))]);
      } else {
        const long start = std::clamp(static_cast<long>(i) - 2, 0L, static_cast<long>(len) - kHuWindow);
        for (long k = 0; k < kHuWindow; ++k) window.push_back(norm_pts[begin + static_cast<std::size_t>(start + k)]);
      }
      const auto h = window.size() >= 3 ? hu_moments(window) : std::array<double, 7>{};
      for (int k = 0; k < 7; ++k) f.values(static_cast<Eigen::Index>(begin + i), 2 + k) = signed_log(h[static_cast<std::size_t>(k)]);
    }
    begin = end;
  }
  return f;
}

FeatureMatrix featurize(const SymbolRegion& region) { return featurize(resample_region(region)); }

namespace {
constexpr char kMagic[4] = {'O', 'S', 'F', 'M'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4] = {};
  is.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

void write_features(const FeatureMatrix& f, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  os.write(kMagic, 4);
  put_u32(os, 1);
  put_u32(os, static_cast<std::uint32_t>(f.values.rows()));
  put_u32(os, static_cast<std::uint32_t>(f.values.cols()));
  for (Eigen::Index r = 0; r < f.values.rows(); ++r)
    for (Eigen::Index c = 0; c < f.values.cols(); ++c) {
      const float v = static_cast<float>(f.values(r, c));
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      put_u32(os, bits);
    }
  if (!os) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::FileNotFound, path.string());
  char magic[4] = {};
  is.read(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw Error(ErrorCode::UnsupportedFormat, "bad feature magic");
  if (get_u32(is) != 1) throw Error(ErrorCode::UnsupportedFormat, "unknown feature version");
  const auto rows = get_u32(is), cols = get_u32(is);
  FeatureMatrix f;
  f.values.resize(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) {
      const std::uint32_t bits = get_u32(is);
      float v;
      std::memcpy(&v, &bits, 4);
      f.values(r, c) = v;
    }
  if (!is) throw Error(ErrorCode::CorruptImage, "truncated feature file");
  return f;
}

}  // namespace ossr
