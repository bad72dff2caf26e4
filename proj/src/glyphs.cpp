#include <algorithm>
#include <cmath>

#include "ossr/error.hpp"
#include "ossr/synthgen.hpp"

namespace ossr {

namespace {

constexpr int kSize = 48;
constexpr double kStroke = 3.0;

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return distance(p, a + ab * t);
}

class Pen {
 public:
  Pen(int w, int h) : img_(w, h) {}

  void line(Vec2 a, Vec2 b) {
    paint([&](Vec2 p) { return segment_distance(p, a, b) <= kStroke / 2; });
  }
  void polygon(std::initializer_list<Vec2> pts) {
    const std::vector<Vec2> v(pts);
    for (std::size_t i = 0; i < v.size(); ++i) line(v[i], v[(i + 1) % v.size()]);
  }
  void ring(Vec2 c, double r) {
    paint([&](Vec2 p) { return std::fabs(distance(p, c) - r) <= kStroke / 2; });
  }
  void disk(Vec2 c, double r) {
    paint([&](Vec2 p) { return distance(p, c) <= r; });
  }
  BinaryImage take() { return std::move(img_); }

 private:
  template <class Inside>
  void paint(Inside&& inside) {
    for (int y = 0; y < img_.height; ++y)
      for (int x = 0; x < img_.width; ++x)
        if (inside(Vec2{x + 0.5, y + 0.5})) img_.set(x, y, true);
  }
  BinaryImage img_;
};

// Strokes are centred 1.5 px inside the canvas so ink reaches every edge.
constexpr double lo = kStroke / 2, hi = kSize - kStroke / 2, mid = kSize / 2.0;

BinaryImage circle(bool bar, bool inner) {
  Pen pen(kSize, kSize);
  pen.ring({mid, mid}, mid - lo);
  if (bar) pen.line({mid, lo}, {mid, hi});
  if (inner) pen.ring({mid, mid}, 12);
  return pen.take();
}

BinaryImage diamond() {
  Pen pen(kSize, kSize);
  pen.polygon({{lo, mid}, {mid, lo}, {hi, mid}, {mid, hi}});
  return pen.take();
}

BinaryImage gate(bool dot) {
  constexpr int h = 38;
  Pen pen(kSize, h);
  const double c = h / 2.0, top = lo, bot = h - lo;
  pen.polygon({{lo, top}, {lo, bot}, {mid, c}});
  pen.polygon({{hi, top}, {hi, bot}, {mid, c}});
  if (dot) pen.disk({mid, c}, 6);
  return pen.take();
}

BinaryImage square(bool cross) {
  Pen pen(kSize, kSize);
  pen.polygon({{lo, lo}, {hi, lo}, {hi, hi}, {lo, hi}});
  if (cross) {
    pen.line({lo, lo}, {hi, hi});
    pen.line({hi, lo}, {lo, hi});
  }
  return pen.take();
}

BinaryImage check_valve() {
  constexpr int h = 40;
  Pen pen(kSize, h);
  const double c = h / 2.0;
  pen.polygon({{lo, lo}, {lo, h - lo}, {34, c}});
  pen.line({34, c}, {hi, c});
  pen.line({hi, lo}, {hi, h - lo});
  return pen.take();
}

BinaryImage hexagon() {
  constexpr int h = 42;
  Pen pen(kSize, h);
  const double c = h / 2.0;
  pen.polygon({{lo, c}, {13, lo}, {35, lo}, {hi, c}, {35, h - lo}, {13, h - lo}});
  return pen.take();
}

}  // namespace

GlyphSet builtin_glyphs() {
  GlyphSet g;
  g["circle"] = circle(false, false);
  g["circle_bar"] = circle(true, false);
  g["double_circle"] = circle(false, true);
  g["diamond"] = diamond();
  g["gate"] = gate(false);
  g["gate_dot"] = gate(true);
  g["square"] = square(false);
  g["square_x"] = square(true);
  g["check_valve"] = check_valve();
  g["hexagon"] = hexagon();
  return g;
}

GlyphSet load_glyphs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::FileNotFound, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".png" || ext == ".pgm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  GlyphSet g;
  for (const auto& f : files) {
    const GrayImage img = load_image(f);
    BinaryImage bin(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) bin.set(x, y, img.at(x, y) < 128);
    g[f.stem().string()] = std::move(bin);
  }
  return g;
}

BinaryImage rotate_quarter(const BinaryImage& img, int quarter_turns) {
  const int q = ((quarter_turns % 4) + 4) % 4;
  if (q == 0) return img;
  const bool swap = q % 2 == 1;
  BinaryImage out(swap ? img.height : img.width, swap ? img.width : img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      if (!img.at(x, y)) continue;
      switch (q) {
        case 1: out.set(img.height - 1 - y, x, true); break;
        case 2: out.set(img.width - 1 - x, img.height - 1 - y, true); break;
        default: out.set(y, img.width - 1 - x, true); break;
      }
    }
  return out;
}

BinaryImage scale_nearest(const BinaryImage& img, double factor) {
  const int w = std::max(1, static_cast<int>(std::lround(img.width * factor)));
  const int h = std::max(1, static_cast<int>(std::lround(img.height * factor)));
  BinaryImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(img.width - 1, static_cast<int>((x + 0.5) * img.width / w));
      const int sy = std::min(img.height - 1, static_cast<int>((y + 0.5) * img.height / h));
      out.set(x, y, img.at(sx, sy));
    }
  return out;
}

}  // namespace ossr
