#include "ossr/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "ossr/error.hpp"

namespace ossr {

Vec2 Segment::eval(double t) const {
  if (kind == SegmentKind::Line) return lerp(p[0], p[3], t);
  const double s = 1 - t;
  return p[0] * (s * s * s) + p[1] * (3 * s * s * t) + p[2] * (3 * s * t * t) + p[3] * (t * t * t);
}

std::size_t VectorPathSet::loop_count() const {
  std::size_t n = 0;
  for (const auto& p : paths) n += p.loops.size();
  return n;
}

double signed_area(std::span<const Vec2> poly) {
  double a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return a / 2;
}

// ---------------------------------------------------------------------------
// Path decomposition

namespace {

using IPoint = std::array<int, 2>;

class WorkBitmap {
 public:
  explicit WorkBitmap(const BinaryImage& img) : w_(img.width), h_(img.height), bits_(img.mask) {}
  bool get(int x, int y) const {
    return x >= 0 && y >= 0 && x < w_ && y < h_ && bits_[static_cast<std::size_t>(y) * w_ + x];
  }
  void flip_row(int y, int xa, int xb) {  // toggles [xa, xb)
    auto* row = bits_.data() + static_cast<std::size_t>(y) * w_;
    for (int x = std::max(xa, 0); x < std::min(xb, w_); ++x) row[x] ^= 1;
  }
  bool find_next(int& x, int& y) const {
    for (; y < h_; ++y, x = 0) {
      const auto* row = bits_.data() + static_cast<std::size_t>(y) * w_;
      for (; x < w_; ++x)
        if (row[x]) return true;
    }
    return false;
  }

 private:
  int w_, h_;
  std::vector<std::uint8_t> bits_;
};

// Decides ambiguous diagonal configurations by the local colour balance in
// square rings of radius 2..4 around the corner.
bool majority(const WorkBitmap& bm, int x, int y) {
  for (int i = 2; i < 5; ++i) {
    int ct = 0;
    for (int a = -i + 1; a <= i - 1; ++a) {
      ct += bm.get(x + a, y + i - 1) ? 1 : -1;
      ct += bm.get(x + i - 1, y + a - 1) ? 1 : -1;
      ct += bm.get(x + a - 1, y - i) ? 1 : -1;
      ct += bm.get(x - i, y + a) ? 1 : -1;
    }
    if (ct > 0) return true;
    if (ct < 0) return false;
  }
  return false;
}

// Walks the boundary starting at the top-left corner of pixel (x0, y0) with
// the ink on the left-hand side.
std::vector<IPoint> walk_contour(const WorkBitmap& bm, int x0, int y0, bool positive, TurnPolicy policy) {
  std::vector<IPoint> pts;
  int x = x0, y = y0, dx = 0, dy = 1;
  while (true) {
    pts.push_back({x, y});
    x += dx;
    y += dy;
    if (x == x0 && y == y0) break;
    const bool left = bm.get(x + (dx + dy - 1) / 2, y + (dy - dx - 1) / 2);
    const bool right = bm.get(x + (dx - dy - 1) / 2, y + (dy + dx - 1) / 2);
    bool turn_right = false, turn_left = false;
    if (right && !left) {
      const bool connect = policy == TurnPolicy::Right || (policy == TurnPolicy::Black && positive) ||
                           (policy == TurnPolicy::White && !positive) ||
                           (policy == TurnPolicy::Majority && majority(bm, x, y)) ||
                           (policy == TurnPolicy::Minority && !majority(bm, x, y));
      turn_right = connect;
      turn_left = !connect;
    } else if (right) {
      turn_right = true;
    } else if (!left) {
      turn_left = true;
    }
    if (turn_right) {
      const int t = dx;
      dx = -dy;
      dy = t;
    } else if (turn_left) {
      const int t = dx;
      dx = dy;
      dy = -t;
    }
  }
  return pts;
}

long shoelace2(const std::vector<IPoint>& pts) {
  long a = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    const auto& q = pts[(i + 1) % pts.size()];
    a += static_cast<long>(p[0]) * q[1] - static_cast<long>(q[0]) * p[1];
  }
  return a;
}

// 8-connected component labels of the original foreground.
std::vector<int> label_components(const BinaryImage& img) {
  std::vector<int> label(img.mask.size(), -1);
  std::vector<int> stack;
  int next = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int idx = y * img.width + x;
      if (!img.mask[idx] || label[idx] >= 0) continue;
      label[idx] = next;
      stack.push_back(idx);
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cx = cur % img.width, cy = cur / img.width;
        for (int ny = cy - 1; ny <= cy + 1; ++ny)
          for (int nx = cx - 1; nx <= cx + 1; ++nx) {
            if (!img.in_bounds(nx, ny)) continue;
            const int n = ny * img.width + nx;
            if (img.mask[n] && label[n] < 0) {
              label[n] = next;
              stack.push_back(n);
            }
          }
      }
      ++next;
    }
  }
  return label;
}

}  // namespace

std::vector<ContourGroup> decompose_paths(const BinaryImage& img, TurnPolicy turn_policy, int turdsize) {
  std::vector<ContourGroup> groups;
  if (img.width <= 0 || img.height <= 0) return groups;
  WorkBitmap work(img);
  const auto labels = label_components(img);
  std::map<int, std::size_t> group_of_label;

  int x = 0, y = 0;
  while (work.find_next(x, y)) {
    const bool positive = img.at(x, y);
    auto pts = walk_contour(work, x, y, positive, turn_policy);

    // Invert the interior so nested boundaries surface on later scans.
    const int xref = pts[0][0];
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& p = pts[i];
      const auto& q = pts[(i + 1) % pts.size()];
      if (p[1] != q[1]) work.flip_row(std::min(p[1], q[1]), std::min(p[0], xref), std::max(p[0], xref));
    }

    const long area2 = shoelace2(pts);
    const long area = std::labs(area2) / 2;
    if (area <= turdsize) continue;

    // The ink pixel bordering the first edge identifies the component.
    const int dx = pts[1][0] - pts[0][0], dy = pts[1][1] - pts[0][1];
    const int lx = pts[0][0] + (dx + dy - 1) / 2, ly = pts[0][1] + (dy - dx - 1) / 2;
    const int rx = pts[0][0] + (dx - dy - 1) / 2, ry = pts[0][1] + (dy + dx - 1) / 2;
    int label = -1;
    if (img.get(lx, ly)) label = labels[ly * img.width + lx];
    else if (img.get(rx, ry)) label = labels[ry * img.width + rx];
    if (label < 0) continue;  // cannot happen for a boundary between ink and paper

    PixelContour c;
    c.orientation = positive ? LoopOrientation::Outer : LoopOrientation::Hole;
    c.area = area;
    // The walk keeps ink on the left, which yields negative shoelace area in
    // image coordinates; outer boundaries are flipped to positive.
    const bool want_positive = positive;
    if ((area2 > 0) != want_positive) std::reverse(pts.begin() + 1, pts.end());
    c.points = std::move(pts);

    auto [it, inserted] = group_of_label.try_emplace(label, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].contours.push_back(std::move(c));
  }
  for (auto& g : groups)
    std::stable_partition(g.contours.begin(), g.contours.end(),
                          [](const PixelContour& c) { return c.orientation == LoopOrientation::Outer; });
  return groups;
}

// ---------------------------------------------------------------------------
// Curve fitting: straight-run detection, optimal polygon, vertex adjustment,
// corner/curve smoothing and curve merging.

namespace {

struct Sums {
  double x = 0, y = 0, xy = 0, x2 = 0, y2 = 0;
};

inline int mod(int a, int n) { return a >= n ? a % n : a >= 0 ? a : n - 1 - (-1 - a) % n; }
inline int floordiv(int a, int n) { return a >= 0 ? a / n : -1 - (-1 - a) / n; }
inline int sign(double v) { return v > 0 ? 1 : v < 0 ? -1 : 0; }
inline int isign(int v) { return v > 0 ? 1 : v < 0 ? -1 : 0; }
inline long ixprod(IPoint a, IPoint b) { return static_cast<long>(a[0]) * b[1] - static_cast<long>(a[1]) * b[0]; }
// true iff a <= b < c cyclically
inline bool cyclic(int a, int b, int c) { return a <= c ? (a <= b && b < c) : (a <= b || b < c); }

inline double dpara(Vec2 p0, Vec2 p1, Vec2 p2) { return (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y); }
inline double cprod(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3) {
  return (p1.x - p0.x) * (p3.y - p2.y) - (p3.x - p2.x) * (p1.y - p0.y);
}
inline double iprod(Vec2 p0, Vec2 p1, Vec2 p2) { return (p1.x - p0.x) * (p2.x - p0.x) + (p1.y - p0.y) * (p2.y - p0.y); }
inline double iprod1(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3) {
  return (p1.x - p0.x) * (p3.x - p2.x) + (p1.y - p0.y) * (p3.y - p2.y);
}
inline double ddenom(Vec2 p0, Vec2 p2) {
  const double ry = sign(p2.x - p0.x), rx = -sign(p2.y - p0.y);
  return ry * (p2.x - p0.x) - rx * (p2.y - p0.y);
}
inline Vec2 bezier_at(double t, Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3) {
  const double s = 1 - t;
  return p0 * (s * s * s) + p1 * (3 * s * s * t) + p2 * (3 * s * t * t) + p3 * (t * t * t);
}

// Parameter in [0,1] where the bezier tangent is parallel to q0q1, or -1.
double tangent_param(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, Vec2 q0, Vec2 q1) {
  const double A = cprod(p0, p1, q0, q1), B = cprod(p1, p2, q0, q1), C = cprod(p2, p3, q0, q1);
  const double a = A - 2 * B + C, b = -2 * A + 2 * B, c = A;
  const double d = b * b - 4 * a * c;
  if (a == 0 || d < 0) return -1.0;
  const double s = std::sqrt(d);
  const double r1 = (-b + s) / (2 * a), r2 = (-b - s) / (2 * a);
  if (r1 >= 0 && r1 <= 1) return r1;
  if (r2 >= 0 && r2 <= 1) return r2;
  return -1.0;
}

enum class Tag { Corner, Curve };

struct Curve {
  std::vector<Tag> tag;
  std::vector<std::array<Vec2, 3>> c;
  std::vector<Vec2> vertex;
  std::vector<double> alpha, alpha0, beta;

  explicit Curve(int n) : tag(n), c(n), vertex(n), alpha(n), alpha0(n), beta(n) {}
  int size() const { return static_cast<int>(tag.size()); }
};

class CurveFitter {
 public:
  explicit CurveFitter(std::vector<IPoint> pts) : pt_(std::move(pts)), n_(static_cast<int>(pt_.size())) {}

  Curve run(double alphamax, bool optimize, double opttolerance) {
    calc_sums();
    calc_lon();
    best_polygon();
    Curve curve = adjust_vertices();
    smooth(curve, alphamax);
    if (optimize) return opticurve(curve, opttolerance);
    return curve;
  }

 private:
  std::vector<IPoint> pt_;
  int n_;
  std::vector<Sums> sums_;
  std::vector<int> lon_;
  std::vector<int> po_;

  void calc_sums() {
    const int x0 = pt_[0][0], y0 = pt_[0][1];
    sums_.assign(n_ + 1, {});
    for (int i = 0; i < n_; ++i) {
      const double x = pt_[i][0] - x0, y = pt_[i][1] - y0;
      sums_[i + 1] = {sums_[i].x + x, sums_[i].y + y, sums_[i].xy + x * y, sums_[i].x2 + x * x, sums_[i].y2 + y * y};
    }
  }

  // lon[i]: furthest index reachable from i by a path that stays straight.
  void calc_lon() {
    const int n = n_;
    std::vector<int> nc(n), pivk(n);
    lon_.assign(n, 0);
    int k = 0;
    for (int i = n - 1; i >= 0; --i) {
      if (pt_[i][0] != pt_[k][0] && pt_[i][1] != pt_[k][1]) k = i + 1;
      nc[i] = k;
    }
    for (int i = n - 1; i >= 0; --i) {
      int ct[4] = {0, 0, 0, 0};
      int dir = (3 + 3 * (pt_[mod(i + 1, n)][0] - pt_[i][0]) + (pt_[mod(i + 1, n)][1] - pt_[i][1])) / 2;
      ++ct[dir];
      IPoint constraint[2] = {{0, 0}, {0, 0}};
      k = nc[i];
      int k1 = i;
      bool found = false;
      while (true) {
        dir = (3 + 3 * isign(pt_[k][0] - pt_[k1][0]) + isign(pt_[k][1] - pt_[k1][1])) / 2;
        ++ct[dir];
        if (ct[0] && ct[1] && ct[2] && ct[3]) {
          pivk[i] = k1;
          found = true;
          break;
        }
        const IPoint cur = {pt_[k][0] - pt_[i][0], pt_[k][1] - pt_[i][1]};
        if (ixprod(constraint[0], cur) < 0 || ixprod(constraint[1], cur) > 0) break;
        if (std::abs(cur[0]) > 1 || std::abs(cur[1]) > 1) {
          IPoint off = {cur[0] + ((cur[1] >= 0 && (cur[1] > 0 || cur[0] < 0)) ? 1 : -1),
                        cur[1] + ((cur[0] <= 0 && (cur[0] < 0 || cur[1] < 0)) ? 1 : -1)};
          if (ixprod(constraint[0], off) >= 0) constraint[0] = off;
          off = {cur[0] + ((cur[1] <= 0 && (cur[1] < 0 || cur[0] < 0)) ? 1 : -1),
                 cur[1] + ((cur[0] >= 0 && (cur[0] > 0 || cur[1] < 0)) ? 1 : -1)};
          if (ixprod(constraint[1], off) <= 0) constraint[1] = off;
        }
        k1 = k;
        k = nc[k1];
        if (!cyclic(k, i, k1)) break;
      }
      if (found) continue;
      // Last point on k1..k still satisfying the constraint.
      const IPoint dk = {isign(pt_[k][0] - pt_[k1][0]), isign(pt_[k][1] - pt_[k1][1])};
      const IPoint cur = {pt_[k1][0] - pt_[i][0], pt_[k1][1] - pt_[i][1]};
      const long a = ixprod(constraint[0], cur), b = ixprod(constraint[0], dk);
      const long c = ixprod(constraint[1], cur), d = ixprod(constraint[1], dk);
      long j = 10000000;
      if (b < 0) j = floordiv(static_cast<int>(a), static_cast<int>(-b));
      if (d > 0) j = std::min(j, static_cast<long>(floordiv(static_cast<int>(-c), static_cast<int>(d))));
      pivk[i] = mod(static_cast<int>(k1 + j), n);
    }
    int j = pivk[n - 1];
    lon_[n - 1] = j;
    for (int i = n - 2; i >= 0; --i) {
      if (cyclic(i + 1, pivk[i], j)) j = pivk[i];
      lon_[i] = j;
    }
    for (int i = n - 1; cyclic(mod(i + 1, n), j, lon_[n - 1]); --i) lon_[i] = j;
  }

  // Standard deviation-like penalty of approximating pt[i..j] by a segment.
  double penalty3(int i, int j) const {
    const int n = n_;
    int r = 0;
    if (j >= n) {
      j -= n;
      r = 1;
    }
    double x, y, x2, xy, y2, k;
    if (r == 0) {
      x = sums_[j + 1].x - sums_[i].x;
      y = sums_[j + 1].y - sums_[i].y;
      x2 = sums_[j + 1].x2 - sums_[i].x2;
      xy = sums_[j + 1].xy - sums_[i].xy;
      y2 = sums_[j + 1].y2 - sums_[i].y2;
      k = j + 1 - i;
    } else {
      x = sums_[j + 1].x - sums_[i].x + sums_[n].x;
      y = sums_[j + 1].y - sums_[i].y + sums_[n].y;
      x2 = sums_[j + 1].x2 - sums_[i].x2 + sums_[n].x2;
      xy = sums_[j + 1].xy - sums_[i].xy + sums_[n].xy;
      y2 = sums_[j + 1].y2 - sums_[i].y2 + sums_[n].y2;
      k = j + 1 - i + n;
    }
    const double px = (pt_[i][0] + pt_[j][0]) / 2.0 - pt_[0][0];
    const double py = (pt_[i][1] + pt_[j][1]) / 2.0 - pt_[0][1];
    const double ey = pt_[j][0] - pt_[i][0];
    const double ex = -(pt_[j][1] - pt_[i][1]);
    const double a = (x2 - 2 * x * px) / k + px * px;
    const double b = (xy - x * py - y * px) / k + px * py;
    const double c = (y2 - 2 * y * py) / k + py * py;
    const double s = ex * ex * a + 2 * ex * ey * b + ey * ey * c;
    return std::sqrt(std::max(s, 0.0));
  }

  void best_polygon() {
    const int n = n_;
    std::vector<double> pen(n + 1);
    std::vector<int> prev(n + 1), clip0(n), clip1(n + 1), seg0(n + 1), seg1(n + 1);
    for (int i = 0; i < n; ++i) {
      int c = mod(lon_[mod(i - 1, n)] - 1, n);
      if (c == i) c = mod(i + 1, n);
      clip0[i] = c < i ? n : c;
    }
    int j = 1;
    for (int i = 0; i < n; ++i)
      while (j <= clip0[i]) clip1[j++] = i;
    int i = 0;
    for (j = 0; i < n; ++j) {
      seg0[j] = i;
      i = clip0[i];
    }
    seg0[j] = n;
    const int m = j;
    i = n;
    for (j = m; j > 0; --j) {
      seg1[j] = i;
      i = clip1[i];
    }
    seg1[0] = 0;
    pen[0] = 0;
    for (j = 1; j <= m; ++j) {
      for (i = seg1[j]; i <= seg0[j]; ++i) {
        double best = -1;
        for (int k = seg0[j - 1]; k >= clip1[i]; --k) {
          const double thispen = penalty3(k, i) + pen[k];
          if (best < 0 || thispen < best) {
            prev[i] = k;
            best = thispen;
          }
        }
        pen[i] = best;
      }
    }
    po_.assign(m, 0);
    for (i = n, j = m - 1; i > 0; --j) {
      i = prev[i];
      po_[j] = i;
    }
  }

  void pointslope(int i, int j, Vec2& ctr, Vec2& dir) const {
    const int n = n_;
    int r = 0;
    while (j >= n) { j -= n; ++r; }
    while (i >= n) { i -= n; --r; }
    while (j < 0) { j += n; --r; }
    while (i < 0) { i += n; ++r; }
    const double x = sums_[j + 1].x - sums_[i].x + r * sums_[n].x;
    const double y = sums_[j + 1].y - sums_[i].y + r * sums_[n].y;
    const double x2 = sums_[j + 1].x2 - sums_[i].x2 + r * sums_[n].x2;
    const double xy = sums_[j + 1].xy - sums_[i].xy + r * sums_[n].xy;
    const double y2 = sums_[j + 1].y2 - sums_[i].y2 + r * sums_[n].y2;
    const double k = j + 1 - i + r * n;
    ctr = {x / k, y / k};
    double a = (x2 - x * x / k) / k;
    const double b = (xy - x * y / k) / k;
    double c = (y2 - y * y / k) / k;
    const double lambda2 = (a + c + std::sqrt((a - c) * (a - c) + 4 * b * b)) / 2;
    a -= lambda2;
    c -= lambda2;
    double l;
    if (std::fabs(a) >= std::fabs(c)) {
      l = std::sqrt(a * a + b * b);
      if (l != 0) dir = {-b / l, a / l};
    } else {
      l = std::sqrt(c * c + b * b);
      if (l != 0) dir = {-c / l, b / l};
    }
    if (l == 0) dir = {0, 0};
  }

  using Quad = std::array<std::array<double, 3>, 3>;

  static double quadform(const Quad& q, Vec2 w) {
    const double v[3] = {w.x, w.y, 1};
    double sum = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) sum += v[i] * q[i][j] * v[j];
    return sum;
  }

  // Places each polygon vertex at the point of its unit pixel square that
  // best fits the two adjacent least-squares lines.
  Curve adjust_vertices() {
    const int m = static_cast<int>(po_.size());
    const int n = n_;
    const int x0 = pt_[0][0], y0 = pt_[0][1];
    std::vector<Vec2> ctr(m), dir(m);
    std::vector<Quad> q(m);
    for (int i = 0; i < m; ++i) {
      int j = po_[mod(i + 1, m)];
      j = mod(j - po_[i], n) + po_[i];
      pointslope(po_[i], j, ctr[i], dir[i]);
    }
    for (int i = 0; i < m; ++i) {
      const double d = dir[i].x * dir[i].x + dir[i].y * dir[i].y;
      if (d == 0.0) {
        q[i] = {};
      } else {
        const double v[3] = {dir[i].y, -dir[i].x, -(-dir[i].x) * ctr[i].y - dir[i].y * ctr[i].x};
        for (int l = 0; l < 3; ++l)
          for (int k = 0; k < 3; ++k) q[i][l][k] = v[l] * v[k] / d;
      }
    }
    Curve curve(m);
    for (int i = 0; i < m; ++i) {
      const Vec2 s = {static_cast<double>(pt_[po_[i]][0] - x0), static_cast<double>(pt_[po_[i]][1] - y0)};
      const int j = mod(i - 1, m);
      Quad Q;
      for (int l = 0; l < 3; ++l)
        for (int k = 0; k < 3; ++k) Q[l][k] = q[j][l][k] + q[i][l][k];
      Vec2 w;
      while (true) {
        const double det = Q[0][0] * Q[1][1] - Q[0][1] * Q[1][0];
        if (det != 0.0) {
          w = {(-Q[0][2] * Q[1][1] + Q[1][2] * Q[0][1]) / det, (Q[0][2] * Q[1][0] - Q[1][2] * Q[0][0]) / det};
          break;
        }
        // Parallel lines: add an orthogonal axis through the vertex.
        double v[3];
        if (Q[0][0] > Q[1][1]) {
          v[0] = -Q[0][1];
          v[1] = Q[0][0];
        } else if (Q[1][1] != 0.0) {
          v[0] = -Q[1][1];
          v[1] = Q[1][0];
        } else {
          v[0] = 1;
          v[1] = 0;
        }
        const double d = v[0] * v[0] + v[1] * v[1];
        v[2] = -v[1] * s.y - v[0] * s.x;
        for (int l = 0; l < 3; ++l)
          for (int k = 0; k < 3; ++k) Q[l][k] += v[l] * v[k] / d;
      }
      if (std::fabs(w.x - s.x) <= 0.5 && std::fabs(w.y - s.y) <= 0.5) {
        curve.vertex[i] = {w.x + x0, w.y + y0};
        continue;
      }
      // Minimum outside the square: search its boundary.
      double best = quadform(Q, s);
      Vec2 arg = s;
      if (Q[0][0] != 0.0) {
        for (int z = 0; z < 2; ++z) {
          Vec2 c;
          c.y = s.y - 0.5 + z;
          c.x = -(Q[0][1] * c.y + Q[0][2]) / Q[0][0];
          const double cand = quadform(Q, c);
          if (std::fabs(c.x - s.x) <= 0.5 && cand < best) {
            best = cand;
            arg = c;
          }
        }
      }
      if (Q[1][1] != 0.0) {
        for (int z = 0; z < 2; ++z) {
          Vec2 c;
          c.x = s.x - 0.5 + z;
          c.y = -(Q[1][0] * c.x + Q[1][2]) / Q[1][1];
          const double cand = quadform(Q, c);
          if (std::fabs(c.y - s.y) <= 0.5 && cand < best) {
            best = cand;
            arg = c;
          }
        }
      }
      for (int l = 0; l < 2; ++l)
        for (int k = 0; k < 2; ++k) {
          const Vec2 c = {s.x - 0.5 + l, s.y - 0.5 + k};
          const double cand = quadform(Q, c);
          if (cand < best) {
            best = cand;
            arg = c;
          }
        }
      curve.vertex[i] = {arg.x + x0, arg.y + y0};
    }
    return curve;
  }

  static void smooth(Curve& curve, double alphamax) {
    const int m = curve.size();
    for (int i = 0; i < m; ++i) {
      const int j = mod(i + 1, m), k = mod(i + 2, m);
      const Vec2 p4 = lerp(curve.vertex[k], curve.vertex[j], 0.5);
      double alpha;
      const double denom = ddenom(curve.vertex[i], curve.vertex[k]);
      if (denom != 0.0) {
        double dd = std::fabs(dpara(curve.vertex[i], curve.vertex[j], curve.vertex[k]) / denom);
        alpha = dd > 1 ? (1 - 1.0 / dd) : 0;
        alpha = alpha / 0.75;
      } else {
        alpha = 4 / 3.0;
      }
      curve.alpha0[j] = alpha;
      if (alpha >= alphamax) {
        curve.tag[j] = Tag::Corner;
        curve.c[j][1] = curve.vertex[j];
        curve.c[j][2] = p4;
      } else {
        alpha = std::clamp(alpha, 0.55, 1.0);
        curve.tag[j] = Tag::Curve;
        curve.c[j][0] = lerp(curve.vertex[i], curve.vertex[j], 0.5 + 0.5 * alpha);
        curve.c[j][1] = lerp(curve.vertex[k], curve.vertex[j], 0.5 + 0.5 * alpha);
        curve.c[j][2] = p4;
      }
      curve.alpha[j] = alpha;
      curve.beta[j] = 0.5;
    }
  }

  struct Opti {
    double pen = 0;
    Vec2 c[2];
    double t = 0, s = 0, alpha = 0;
  };

  // Cost of replacing curve segments i+1..j by one bezier; false if not allowed.
  static bool opti_penalty(const Curve& curve, int i, int j, Opti& res, double opttolerance,
                           const std::vector<int>& convc, const std::vector<double>& areac) {
    static const double kCos179 = std::cos(179.0 * std::numbers::pi / 180.0);
    const int m = curve.size();
    if (i == j) return false;
    int k = i;
    const int i1 = mod(i + 1, m);
    int k1 = mod(k + 1, m);
    const int conv = convc[k1];
    if (conv == 0) return false;
    const double d0 = distance(curve.vertex[i], curve.vertex[i1]);
    for (k = k1; k != j; k = k1) {
      k1 = mod(k + 1, m);
      const int k2 = mod(k + 2, m);
      if (convc[k1] != conv) return false;
      if (sign(cprod(curve.vertex[i], curve.vertex[i1], curve.vertex[k1], curve.vertex[k2])) != conv) return false;
      if (iprod1(curve.vertex[i], curve.vertex[i1], curve.vertex[k1], curve.vertex[k2]) <
          d0 * distance(curve.vertex[k1], curve.vertex[k2]) * kCos179)
        return false;
    }
    const Vec2 p0 = curve.c[mod(i, m)][2];
    Vec2 p1 = curve.vertex[mod(i + 1, m)];
    Vec2 p2 = curve.vertex[mod(j, m)];
    const Vec2 p3 = curve.c[mod(j, m)][2];

    double area = areac[j] - areac[i];
    area -= dpara(curve.vertex[0], curve.c[i][2], curve.c[j][2]) / 2;
    if (i >= j) area += areac[m];

    const double A1 = dpara(p0, p1, p2), A2 = dpara(p0, p1, p3), A3 = dpara(p0, p2, p3);
    const double A4 = A1 + A3 - A2;
    if (A2 == A1) return false;
    double t = A3 / (A3 - A4);
    const double s = A2 / (A2 - A1);
    const double A = A2 * t / 2.0;
    if (A == 0.0) return false;
    const double R = area / A;
    const double alpha = 2 - std::sqrt(4 - R / 0.3);
    res.c[0] = lerp(p0, p1, t * alpha);
    res.c[1] = lerp(p3, p2, s * alpha);
    res.alpha = alpha;
    res.t = t;
    res.s = s;
    p1 = res.c[0];
    p2 = res.c[1];
    res.pen = 0;
    if (!std::isfinite(alpha)) return false;

    for (k = mod(i + 1, m); k != j; k = k1) {
      k1 = mod(k + 1, m);
      t = tangent_param(p0, p1, p2, p3, curve.vertex[k], curve.vertex[k1]);
      if (t < -0.5) return false;
      const Vec2 pt = bezier_at(t, p0, p1, p2, p3);
      const double d = distance(curve.vertex[k], curve.vertex[k1]);
      if (d == 0.0) return false;
      const double d1 = dpara(curve.vertex[k], curve.vertex[k1], pt) / d;
      if (std::fabs(d1) > opttolerance) return false;
      if (iprod(curve.vertex[k], curve.vertex[k1], pt) < 0 || iprod(curve.vertex[k1], curve.vertex[k], pt) < 0)
        return false;
      res.pen += d1 * d1;
    }
    for (k = i; k != j; k = k1) {
      k1 = mod(k + 1, m);
      t = tangent_param(p0, p1, p2, p3, curve.c[k][2], curve.c[k1][2]);
      if (t < -0.5) return false;
      const Vec2 pt = bezier_at(t, p0, p1, p2, p3);
      const double d = distance(curve.c[k][2], curve.c[k1][2]);
      if (d == 0.0) return false;
      double d1 = dpara(curve.c[k][2], curve.c[k1][2], pt) / d;
      double d2 = dpara(curve.c[k][2], curve.c[k1][2], curve.vertex[k1]) / d;
      d2 *= 0.75 * curve.alpha[k1];
      if (d2 < 0) {
        d1 = -d1;
        d2 = -d2;
      }
      if (d1 < d2 - opttolerance) return false;
      if (d1 < d2) res.pen += (d1 - d2) * (d1 - d2);
    }
    return true;
  }

  static Curve opticurve(const Curve& curve, double opttolerance) {
    const int m = curve.size();
    std::vector<int> convc(m), pt(m + 1), len(m + 1);
    std::vector<double> areac(m + 1), pen(m + 1);
    std::vector<Opti> opt(m + 1);
    for (int i = 0; i < m; ++i) {
      convc[i] = curve.tag[i] == Tag::Curve
                     ? sign(dpara(curve.vertex[mod(i - 1, m)], curve.vertex[i], curve.vertex[mod(i + 1, m)]))
                     : 0;
    }
    double area = 0.0;
    areac[0] = 0.0;
    const Vec2 p0 = curve.vertex[0];
    for (int i = 0; i < m; ++i) {
      const int i1 = mod(i + 1, m);
      if (curve.tag[i1] == Tag::Curve) {
        const double alpha = curve.alpha[i1];
        area += 0.3 * alpha * (4 - alpha) * dpara(curve.c[i][2], curve.vertex[i1], curve.c[i1][2]) / 2;
        area += dpara(p0, curve.c[i][2], curve.c[i1][2]) / 2;
      }
      areac[i + 1] = area;
    }
    pt[0] = -1;
    pen[0] = 0;
    len[0] = 0;
    for (int j = 1; j <= m; ++j) {
      pt[j] = j - 1;
      pen[j] = pen[j - 1];
      len[j] = len[j - 1] + 1;
      for (int i = j - 2; i >= 0; --i) {
        Opti o;
        if (!opti_penalty(curve, i, mod(j, m), o, opttolerance, convc, areac)) break;
        if (len[j] > len[i] + 1 || (len[j] == len[i] + 1 && pen[j] > pen[i] + o.pen)) {
          pt[j] = i;
          pen[j] = pen[i] + o.pen;
          len[j] = len[i] + 1;
          opt[j] = o;
        }
      }
    }
    const int om = len[m];
    Curve out(om);
    std::vector<double> s(om), t(om);
    int j = m;
    for (int i = om - 1; i >= 0; --i) {
      const int jm = mod(j, m);
      if (pt[j] == j - 1) {
        out.tag[i] = curve.tag[jm];
        out.c[i] = curve.c[jm];
        out.vertex[i] = curve.vertex[jm];
        out.alpha[i] = curve.alpha[jm];
        out.alpha0[i] = curve.alpha0[jm];
        out.beta[i] = curve.beta[jm];
        s[i] = t[i] = 1.0;
      } else {
        out.tag[i] = Tag::Curve;
        out.c[i][0] = opt[j].c[0];
        out.c[i][1] = opt[j].c[1];
        out.c[i][2] = curve.c[jm][2];
        out.vertex[i] = lerp(curve.c[jm][2], curve.vertex[jm], opt[j].s);
        out.alpha[i] = out.alpha0[i] = opt[j].alpha;
        s[i] = opt[j].s;
        t[i] = opt[j].t;
      }
      j = pt[j];
    }
    for (int i = 0; i < om; ++i) out.beta[i] = s[i] / (s[i] + t[mod(i + 1, om)]);
    return out;
  }
};

}  // namespace

Loop fit_curves(const PixelContour& contour, double alphamax, bool optimize, double opttolerance) {
  if (contour.points.size() < 4) throw Error(ErrorCode::DegenerateContour, "contour has fewer than 4 steps");
  // Canonical start (topmost, then leftmost corner) makes the fit independent
  // of where the walk began; that corner is always a direction change.
  auto pts = contour.points;
  const auto start = std::min_element(pts.begin(), pts.end(), [](const IPoint& a, const IPoint& b) {
    return a[1] != b[1] ? a[1] < b[1] : a[0] < b[0];
  });
  std::rotate(pts.begin(), start, pts.end());

  CurveFitter fitter(std::move(pts));
  const Curve curve = fitter.run(alphamax, optimize, opttolerance);

  Loop loop;
  loop.orientation = contour.orientation;
  const int m = curve.size();
  for (int i = 0; i < m; ++i) {
    const Vec2 from = curve.c[mod(i - 1, m)][2];
    if (curve.tag[i] == Tag::Corner) {
      if (distance(from, curve.vertex[i]) > 1e-9) loop.segments.push_back(Segment::line(from, curve.vertex[i]));
      if (distance(curve.vertex[i], curve.c[i][2]) > 1e-9)
        loop.segments.push_back(Segment::line(curve.vertex[i], curve.c[i][2]));
    } else if (distance(from, curve.c[i][2]) > 1e-9) {
      loop.segments.push_back(Segment::bezier(from, curve.c[i][0], curve.c[i][1], curve.c[i][2]));
    }
  }
  // A corner followed by a corner emits two collinear halves; join them.
  auto collinear = [](const Segment& a, const Segment& b) {
    if (a.kind != SegmentKind::Line || b.kind != SegmentKind::Line) return false;
    const Vec2 u = a.end() - a.start(), v = b.end() - b.start();
    return dot(u, v) > 0 && std::fabs(cross(u, v)) <= 1e-9 * norm(u) * norm(v);
  };
  std::vector<Segment> joined;
  for (const auto& s : loop.segments) {
    if (!joined.empty() && collinear(joined.back(), s)) joined.back() = Segment::line(joined.back().start(), s.end());
    else joined.push_back(s);
  }
  while (joined.size() > 2 && collinear(joined.back(), joined.front())) {
    joined.front() = Segment::line(joined.back().start(), joined.front().end());
    joined.pop_back();
  }
  loop.segments = std::move(joined);
  const auto poly = flatten(loop);
  loop.signed_area = signed_area(poly);
  return loop;
}

VectorPathSet trace(const BinaryImage& img, const TraceParams& params) {
  VectorPathSet out;
  out.width = img.width;
  out.height = img.height;
  for (const auto& group : decompose_paths(img, params.turn_policy, params.turdsize)) {
    Path path;
    for (const auto& c : group.contours)
      path.loops.push_back(fit_curves(c, params.alphamax, params.opticurve, params.opttolerance));
    out.paths.push_back(std::move(path));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {
void flatten_bezier(const Segment& s, double tol, int depth, std::vector<Vec2>& out) {
  const Vec2 a = s.p[0], b = s.p[3];
  const Vec2 chord = b - a;
  const double len = norm(chord);
  double dev;
  if (len < 1e-12) {
    dev = std::max(distance(s.p[1], a), distance(s.p[2], a));
  } else {
    dev = std::max(std::fabs(cross(chord, s.p[1] - a)), std::fabs(cross(chord, s.p[2] - a))) / len;
  }
  if (dev <= tol || depth >= 18) {
    out.push_back(b);
    return;
  }
  // de Casteljau split at t = 1/2
  const Vec2 p01 = lerp(s.p[0], s.p[1], 0.5), p12 = lerp(s.p[1], s.p[2], 0.5), p23 = lerp(s.p[2], s.p[3], 0.5);
  const Vec2 p012 = lerp(p01, p12, 0.5), p123 = lerp(p12, p23, 0.5);
  const Vec2 mid = lerp(p012, p123, 0.5);
  flatten_bezier(Segment::bezier(s.p[0], p01, p012, mid), tol, depth + 1, out);
  flatten_bezier(Segment::bezier(mid, p123, p23, s.p[3]), tol, depth + 1, out);
}
}  // namespace

std::vector<Vec2> flatten(const Loop& loop, double tolerance) {
  std::vector<Vec2> out;
  if (loop.segments.empty()) return out;
  out.push_back(loop.segments.front().start());
  for (const auto& s : loop.segments) {
    if (s.kind == SegmentKind::Line) out.push_back(s.end());
    else flatten_bezier(s, tolerance, 0, out);
  }
  if (out.size() > 1 && distance(out.front(), out.back()) < 1e-9) out.pop_back();
  return out;
}

BinaryImage render(const VectorPathSet& paths, int width, int height) {
  BinaryImage out(width, height);
  struct Edge {
    Vec2 a, b;
  };
  std::vector<std::vector<Edge>> rows(static_cast<std::size_t>(std::max(height, 0)));
  for (const auto& path : paths.paths)
    for (const auto& loop : path.loops) {
      const auto poly = flatten(loop);
      for (std::size_t i = 0; i < poly.size(); ++i) {
        Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
        if (a.y == b.y) continue;
        if (a.y > b.y) std::swap(a, b);
        // rows whose centre y+0.5 lies in [a.y, b.y)
        const int r0 = std::max(0, static_cast<int>(std::ceil(a.y - 0.5)));
        const int r1 = std::min(height - 1, static_cast<int>(std::ceil(b.y - 0.5)) - 1);
        for (int r = r0; r <= r1; ++r) rows[r].push_back({a, b});
      }
    }
  std::vector<double> xs;
  for (int y = 0; y < height; ++y) {
    xs.clear();
    const double cy = y + 0.5;
    for (const auto& e : rows[y]) xs.push_back(e.a.x + (cy - e.a.y) * (e.b.x - e.a.x) / (e.b.y - e.a.y));
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
      const int x0 = std::max(0, static_cast<int>(std::ceil(xs[i] - 0.5)));
      const int x1 = std::min(width - 1, static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1);
      for (int x = x0; x <= x1; ++x) out.set(x, y, true);
    }
  }
  return out;
}

}  // namespace ossr
