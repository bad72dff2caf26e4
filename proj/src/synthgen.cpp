#include "ossr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "ossr/error.hpp"

namespace ossr {

namespace {

using Node = std::pair<int, int>;

struct Leg {
  std::size_t pipe;
  Vec2 a, b;  // a < b along the run
  bool horizontal;
};

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return distance(p, a + ab * t);
}

class Router {
 public:
  Router(const SheetConfig& cfg, std::mt19937_64& rng)
      : cfg_(cfg), rng_(rng), nx_(cfg.width / cfg.grid), ny_(cfg.height / cfg.grid) {}

  std::vector<PipePolyline> route() {
    std::vector<PipePolyline> pipes;
    if (nx_ < 3 || ny_ < 3) return pipes;
    std::uniform_int_distribution<int> stroke(cfg_.stroke_min, cfg_.stroke_max);
    for (int p = 0, tries = 0; p < cfg_.pipes && tries < cfg_.pipes * 20; ++tries) {
      auto nodes = walk(!visited_.empty() && coin(0.5));
      if (nodes.size() < 3) continue;
      commit(nodes);
      PipePolyline pl;
      pl.stroke = stroke(rng_);
      pl.vertices = corners(nodes);
      pipes.push_back(std::move(pl));
      ++p;
    }
    return pipes;
  }

  /// Lattice nodes shared by two or more pipes (tees and crossings).
  std::vector<Vec2> shared_nodes() const {
    std::vector<Vec2> out;
    for (const auto& [n, count] : visits_)
      if (count >= 2) out.push_back(to_px(n));
    return out;
  }

 private:
  const SheetConfig& cfg_;
  std::mt19937_64& rng_;
  int nx_, ny_;
  std::set<std::pair<Node, Node>> edges_;
  std::map<Node, int> visits_;
  std::vector<Node> visited_;

  bool coin(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  Vec2 to_px(Node n) const { return {static_cast<double>(n.first * cfg_.grid), static_cast<double>(n.second * cfg_.grid)}; }
  bool inside(Node n) const { return n.first >= 1 && n.second >= 1 && n.first < nx_ && n.second < ny_; }
  static std::pair<Node, Node> edge(Node a, Node b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

  std::vector<Node> walk(bool branch) {
    Node cur = branch ? visited_[uniform(0, static_cast<int>(visited_.size()) - 1)]
                      : Node{uniform(1, nx_ - 1), uniform(1, ny_ - 1)};
    static constexpr int kDirs[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    std::vector<Node> nodes{cur};
    std::set<Node> own{cur};
    int dir = uniform(0, 3);
    const int legs = uniform(2, 4);
    for (int leg = 0; leg < legs; ++leg) {
      if (leg > 0) dir = (dir + (coin(0.5) ? 1 : 3)) % 4;
      const int len = uniform(2, 6);
      int moved = 0;
      for (; moved < len; ++moved) {
        const Node nxt{cur.first + kDirs[dir][0], cur.second + kDirs[dir][1]};
        if (!inside(nxt) || own.count(nxt) || edges_.count(edge(cur, nxt))) break;
        nodes.push_back(nxt);
        own.insert(nxt);
        cur = nxt;
      }
      if (moved == 0) break;
    }
    return nodes;
  }

  void commit(const std::vector<Node>& nodes) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (i + 1 < nodes.size()) edges_.insert(edge(nodes[i], nodes[i + 1]));
      if (visits_[nodes[i]]++ == 0) visited_.push_back(nodes[i]);
    }
  }

  std::vector<Vec2> corners(const std::vector<Node>& nodes) const {
    std::vector<Vec2> v{to_px(nodes.front())};
    for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
      const int dx0 = nodes[i].first - nodes[i - 1].first, dy0 = nodes[i].second - nodes[i - 1].second;
      const int dx1 = nodes[i + 1].first - nodes[i].first, dy1 = nodes[i + 1].second - nodes[i].second;
      if (dx0 != dx1 || dy0 != dy1) v.push_back(to_px(nodes[i]));
    }
    v.push_back(to_px(nodes.back()));
    return v;
  }
};

// First pixel row/column covered by a stroke of width w centred on lattice coordinate c.
int stroke_origin(double c, int w) { return static_cast<int>(c) - w / 2; }

void draw_pipe(BinaryImage& img, const PipePolyline& pipe) {
  const int w = pipe.stroke;
  for (std::size_t i = 0; i + 1 < pipe.vertices.size(); ++i) {
    const Vec2 a = pipe.vertices[i], b = pipe.vertices[i + 1];
    const int x0 = stroke_origin(std::min(a.x, b.x), w), x1 = stroke_origin(std::max(a.x, b.x), w) + w;
    const int y0 = stroke_origin(std::min(a.y, b.y), w), y1 = stroke_origin(std::max(a.y, b.y), w) + w;
    for (int y = std::max(0, y0); y < std::min(img.height, y1); ++y)
      for (int x = std::max(0, x0); x < std::min(img.width, x1); ++x) img.set(x, y, true);
  }
}

}  // namespace

Sheet generate_sheet(const GlyphSet& glyphs, const SheetConfig& cfg, std::uint64_t seed) {
  if (glyphs.empty() && cfg.symbols > 0) throw Error(ErrorCode::InvalidConfig, "no symbol prototypes");
  if (cfg.width <= 0 || cfg.height <= 0 || cfg.grid <= 0) throw Error(ErrorCode::InvalidConfig, "bad canvas");
  std::mt19937_64 rng(seed);
  Router router(cfg, rng);
  Sheet sheet;
  sheet.pipes = router.route();

  std::vector<Leg> legs;
  std::vector<Vec2> special = router.shared_nodes();
  double total = 0;
  for (std::size_t p = 0; p < sheet.pipes.size(); ++p) {
    const auto& v = sheet.pipes[p].vertices;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      Vec2 a = v[i], b = v[i + 1];
      if (b.x < a.x || b.y < a.y) std::swap(a, b);
      legs.push_back({p, a, b, a.y == b.y});
      total += distance(a, b);
    }
    special.insert(special.end(), v.begin(), v.end());
  }

  BinaryImage ink(cfg.width, cfg.height);
  for (const auto& p : sheet.pipes) draw_pipe(ink, p);

  std::vector<std::string> names;
  for (const auto& [name, _] : glyphs) names.push_back(name);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Stamp {
    BinaryImage glyph;
    int x, y;
    std::size_t pipe;
  };
  std::vector<Stamp> stamps;
  std::vector<BBox> taken;
  int retries = 0;
  while (static_cast<int>(sheet.truth.size()) < cfg.symbols) {
    if (legs.empty() || ++retries > cfg.max_retries)
      throw Error(ErrorCode::PlacementOverflow, "placed " + std::to_string(sheet.truth.size()) + " of " +
                                                    std::to_string(cfg.symbols) + " symbols");
    const auto& name = names[std::uniform_int_distribution<std::size_t>(0, names.size() - 1)(rng)];
    const double factor = cfg.scale_min + (cfg.scale_max - cfg.scale_min) * unit(rng);
    // pick a leg proportionally to its length
    double r = unit(rng) * total;
    std::size_t li = 0;
    while (li + 1 < legs.size() && r > distance(legs[li].a, legs[li].b)) {
      r -= distance(legs[li].a, legs[li].b);
      ++li;
    }
    const Leg& leg = legs[li];
    const int turn = (leg.horizontal ? 0 : 1) + (unit(rng) < 0.5 ? 0 : 2);
    BinaryImage glyph = rotate_quarter(scale_nearest(glyphs.at(name), factor), turn);
    const double along = (leg.horizontal ? glyph.width : glyph.height) / 2.0;
    const double across = (leg.horizontal ? glyph.height : glyph.width) / 2.0;
    const double len = distance(leg.a, leg.b);
    const double lo = along + cfg.clearance, hi = len - along - cfg.clearance;
    if (hi <= lo) continue;
    const double s = lo + (hi - lo) * unit(rng);
    const Vec2 dir = (leg.b - leg.a) / len;
    const int w = sheet.pipes[leg.pipe].stroke;
    // Centre on the drawn stroke, not the lattice line.
    const double centre_shift = stroke_origin(0.0, w) + w / 2.0;
    Vec2 c = leg.a + dir * s;
    if (leg.horizontal) c.y += centre_shift;
    else c.x += centre_shift;
    const int gx = static_cast<int>(std::lround(c.x - glyph.width / 2.0));
    const int gy = static_cast<int>(std::lround(c.y - glyph.height / 2.0));
    const BBox box{static_cast<double>(gx), static_cast<double>(gy), static_cast<double>(gx + glyph.width),
                   static_cast<double>(gy + glyph.height)};
    if (box.x0 < cfg.clearance || box.y0 < cfg.clearance || box.x1 > cfg.width - cfg.clearance ||
        box.y1 > cfg.height - cfg.clearance)
      continue;
    bool ok = true;
    for (const auto& p : special)
      if (box.distance_to(p) < cfg.clearance) ok = false;
    for (std::size_t k = 0; ok && k < legs.size(); ++k)
      if (k != li && segment_distance(c, legs[k].a, legs[k].b) < std::max(along, across) + cfg.clearance) ok = false;
    for (const auto& t : taken)
      if (t.inflated(cfg.clearance).intersects(box)) ok = false;
    if (!ok) continue;
    taken.push_back(box);
    stamps.push_back({std::move(glyph), gx, gy, leg.pipe});
    sheet.truth.push_back({name, {}, turn * 90});
  }

  for (std::size_t k = 0; k < stamps.size(); ++k) {
    const auto& st = stamps[k];
    BBox tight;
    for (int y = 0; y < st.glyph.height; ++y)
      for (int x = 0; x < st.glyph.width; ++x) {
        const int px = st.x + x, py = st.y + y;
        if (!ink.in_bounds(px, py)) continue;
        const bool on = st.glyph.at(x, y);
        ink.set(px, py, on);
        if (on) {
          tight.expand(Vec2{static_cast<double>(px), static_cast<double>(py)});
          tight.expand(Vec2{px + 1.0, py + 1.0});
        }
      }
    sheet.truth[k].bbox = tight;
  }

  if (cfg.noise > 0) {
    std::geometric_distribution<long> skip(cfg.noise);
    const long n = static_cast<long>(ink.mask.size());
    for (long i = skip(rng); i < n; i += 1 + skip(rng)) ink.mask[static_cast<std::size_t>(i)] ^= 1;
  }

  sheet.image = GrayImage(cfg.width, cfg.height);
  for (std::size_t i = 0; i < ink.mask.size(); ++i) sheet.image.data[i] = ink.mask[i] ? 0 : 255;
  return sheet;
}

std::uint64_t sheet_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace ossr
