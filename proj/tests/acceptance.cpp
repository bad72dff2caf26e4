// Acceptance checks that run in minutes. Prints one PASS/FAIL line per
// criterion and exits non-zero if any fails. The end-to-end training
// experiment lives in acceptance_end_to_end.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "cli_app.hpp"
#include "gradcheck.hpp"
#include "ossr/config.hpp"
#include "ossr/evalkit.hpp"
#include "ossr/features.hpp"
#include "ossr/net.hpp"
#include "ossr/segmenter.hpp"
#include "ossr/synthgen.hpp"
#include "ossr/tracer.hpp"
#include "support.hpp"
#include "published_rows.hpp"

using namespace ossr;
namespace fs = std::filesystem;

namespace {

std::set<int> failed;

void report(bool ok, int criterion, const std::string& what) {
  std::printf("%s criterion %d %s\n", ok ? "PASS" : "FAIL", criterion, what.c_str());
  std::fflush(stdout);
  if (!ok) failed.insert(criterion);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double a, double b) {
  const double d = std::max(std::abs(a), std::abs(b));
  return d > 0 ? std::abs(a - b) / d : 0.0;
}

void hu_invariance() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-50, 50), ang(0, 2 * std::numbers::pi), sc(0.2, 5);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<Vec2, 6> w;
    for (auto& p : w) p = {u(rng), u(rng)};
    const auto h = hu_moments(w);
    const Vec2 shift{u(rng) * 10, u(rng) * 10};
    const double s = sc(rng), a = ang(rng), c = std::cos(a), si = std::sin(a);
    std::array<Vec2, 6> moved, scaled, turned, mirrored;
    for (int i = 0; i < 6; ++i) {
      moved[i] = w[i] + shift;
      scaled[i] = w[i] * s;
      turned[i] = {c * w[i].x - si * w[i].y, si * w[i].x + c * w[i].y};
      mirrored[i] = {-w[i].x, w[i].y};
    }
    const auto hm = hu_moments(moved), hs = hu_moments(scaled), ht = hu_moments(turned), hr = hu_moments(mirrored);
    for (int k = 0; k < 7; ++k) {
      worst = std::max({worst, rel(h[k], hm[k]), rel(h[k], hs[k]), rel(h[k], ht[k])});
      worst = std::max(worst, k < 6 ? rel(h[k], hr[k]) : rel(h[k], -hr[k]));
    }
  }
  const double secs = seconds_since(t0);
  report(worst < 1e-6 && secs < 5, 1,
         fmt("Hu invariance over 1000 windows: max relative error %.3g (< 1e-6), %.2f s (< 5 s)", worst, secs));
}

void gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  int checked = 0, skipped = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g = testsupport::full_gradient_check(seed);
    worst = std::max(worst, g.worst);
    checked += g.checked;
    skipped += g.skipped;
  }
  const double secs = seconds_since(t0);
  report(worst < 1e-4 && secs < 60 && checked > 0, 2,
         fmt("full-loss gradients over 20 seeds: max relative error %.3g (< 1e-4), %d checked, %d at kinks, %.1f s (< 60 s)",
             worst, checked, skipped, secs));
}

void arcface_reduction() {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const int n = 8, d = 16, c = 6;
    Matrix<double> e(n, d), w(d, c);
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = nd(rng);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = nd(rng);
    for (int i = 0; i < n; ++i) e.row(i).normalize();
    for (int j = 0; j < c; ++j) w.col(j).normalize();
    std::vector<int> y;
    for (int i = 0; i < n; ++i) y.push_back(static_cast<int>(rng() % c));
    const double s = 30.0;
    double direct = 0;
    for (int i = 0; i < n; ++i) {
      double z = 0;
      for (int j = 0; j < c; ++j) z += std::exp(s * e.row(i).dot(w.col(j)));
      direct += std::log(z) - s * e.row(i).dot(w.col(y[static_cast<std::size_t>(i)]));
    }
    direct /= n;
    worst = std::max(worst, std::abs(arcface_loss<double>(e, y, w, s, 0.0).loss - direct));
  }
  report(worst < 1e-9, 3, fmt("zero-margin arcface vs softmax cross-entropy: max difference %.3g (< 1e-9)", worst));
}

void permutation_invariance() {
  std::mt19937_64 rng(404);
  std::normal_distribution<float> nd;
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const ModelState<float> model = ModelState<double>::initialize(NetConfig{}, 500 + trial % 5).cast<float>();
    Matrix<float> x(kCloudPoints, kFeatureDim);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(rng);
    std::vector<int> perm(kCloudPoints);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix<float> px(kCloudPoints, kFeatureDim);
    for (int i = 0; i < kCloudPoints; ++i) px.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    worst = std::max(worst, static_cast<double>((forward(x, model) - forward(px, model)).cwiseAbs().maxCoeff()));
  }
  report(worst < 1e-5, 4, fmt("embedding change under row permutation, 50 trials: %.3g (< 1e-5)", worst));
}

BinaryImage thick_polyline(int w, int h, const std::vector<Vec2>& pts, double stroke) {
  return testsupport::paint(w, h, [&](int x, int y) {
    const Vec2 p{x + 0.5, y + 0.5};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const Vec2 a = pts[i], b = pts[i + 1], ab = b - a;
      const double t = std::clamp(((p - a).x * ab.x + (p - a).y * ab.y) / (ab.x * ab.x + ab.y * ab.y), 0.0, 1.0);
      if (distance(p, a + ab * t) <= stroke / 2) return true;
    }
    return false;
  });
}

void vectorization() {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 1, sum = 0;
  const int size = 120;
  for (int i = 0; i < 50; ++i) {
    BinaryImage img;
    switch (i % 4) {
      case 0: {
        const int a = 10 + static_cast<int>(u(rng) * 60), x = 10 + static_cast<int>(u(rng) * 30), y = 10 + static_cast<int>(u(rng) * 30);
        img = testsupport::rect(size, size, x, y, x + a, y + a);
        break;
      }
      case 1:
        img = testsupport::disk(size, size, 60 + 10 * u(rng), 60 + 10 * u(rng), 8 + 40 * u(rng));
        break;
      case 2: {
        const double cx = 60 + 5 * u(rng), cy = 60 + 5 * u(rng), r0 = 25 + 25 * u(rng), r1 = r0 - 5 - 12 * u(rng);
        img = testsupport::paint(size, size, [=](int x, int y) {
          const double r = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
          return r < r0 && r >= r1;
        });
        break;
      }
      default: {
        std::vector<Vec2> pts;
        for (int k = 0; k < 4; ++k) pts.push_back({10 + 100 * u(rng), 10 + 100 * u(rng)});
        img = thick_polyline(size, size, pts, 3 + 5 * u(rng));
      }
    }
    const double v = testsupport::mask_iou(render(trace(img), size, size), img);
    worst = std::min(worst, v);
    sum += v;
  }
  const BinaryImage o = testsupport::paint(60, 60, [](int x, int y) {
    const double r = std::hypot(x + 0.5 - 30, y + 0.5 - 30);
    return r < 22 && r >= 14;
  });
  const VectorPathSet ov = trace(o);
  const bool two_loops = ov.paths.size() == 1 && ov.paths[0].loops.size() == 2;
  report(worst >= 0.95 && two_loops, 5,
         fmt("trace/render IoU over 50 shapes: min %.4f (>= 0.95), mean %.4f; 'O' glyph: %zu path(s), %zu loop(s)", worst, sum / 50,
             ov.paths.size(), ov.loop_count()));
}

void segmentation() {
  const auto t0 = std::chrono::steady_clock::now();
  const GlyphSet glyphs = builtin_glyphs();
  const SheetConfig sc;
  int correct = 0, false_regions = 0, missing = 0;
  for (int i = 0; i < 20; ++i) {
    const Sheet sheet = generate_sheet(glyphs, sc, sheet_seed(PipelineConfig{}.seed + 1000, static_cast<std::uint64_t>(i)));
    const SegmentResult seg = segment(trace(binarize(sheet.image)));
    std::vector<BBox> pred, gt;
    for (const auto& r : seg.regions) pred.push_back(seg.image_bbox(r));
    for (const auto& t : sheet.truth) gt.push_back(t.bbox);
    const Localization l = match_regions(pred, gt, 0.5);
    correct += l.correct;
    false_regions += l.false_regions;
    missing += l.missing;
  }
  const Prf p = prf(correct, false_regions, missing);
  const double secs = seconds_since(t0);
  report(p.recall >= 0.95 && p.precision >= 0.95 && secs < 300, 6,
         fmt("segmenter on 20 sheets: recall %.4f, precision %.4f (>= 0.95; %d correct, %d false, %d missing), %.0f s (< 300 s)",
             p.recall, p.precision, correct, false_regions, missing, secs));
}

void table_rows() {
  std::vector<std::size_t> rows{0};
  std::vector<std::size_t> rest(testsupport::kPublishedRows.size() - 1);
  std::iota(rest.begin(), rest.end(), 1);
  std::mt19937 rng(2024);
  std::shuffle(rest.begin(), rest.end(), rng);
  rows.insert(rows.end(), rest.begin(), rest.begin() + 10);
  double worst = 0;
  std::string names;
  for (std::size_t r : rows) {
    const auto& row = testsupport::kPublishedRows[r];
    worst = std::max(worst, std::abs(prf_from(row.precision, row.recall).f1 - row.f1));
    names += names.empty() ? row.name : std::string(",") + row.name;
  }
  report(worst <= 1e-4, 8, fmt("prf on published rows %s: max |F1 - printed| %.2g (<= 1e-4)", names.c_str(), worst));
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ossr");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  // The tool's progress log and eval table would bury the criterion lines.
  std::ostringstream sink;
  auto* out = std::cout.rdbuf(sink.rdbuf());
  auto* err = std::cerr.rdbuf(sink.rdbuf());
  const int rc = cli_main(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(out);
  std::cerr.rdbuf(err);
  if (rc != 0) std::cerr << "ossr " << args[1] << " exited " << rc << ":\n" << sink.str();
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// synth -> train -> recognize -> eval through the command-line entry point.
// Training is shortened; determinism does not depend on its length.
bool pipeline(const fs::path& dir) {
  const std::vector<std::string> set{"--seed", "11", "--set", "train.augmentations=3", "--set", "train.epochs=5"};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), set.begin(), set.end());
    return a;
  };
  return cli(with({"synth", "--sheets", "3", "--out", (dir / "sheets").string()})) == 0 &&
         cli(with({"train", "--out", (dir / "model").string()})) == 0 &&
         cli(with({"recognize", (dir / "sheets").string(), "--model", (dir / "model").string(), "--out",
                   (dir / "pred").string()})) == 0 &&
         cli(with({"eval", "--pred", (dir / "pred").string(), "--gt", (dir / "sheets").string(), "--out",
                   (dir / "report.json").string()})) == 0;
}

void determinism() {
  const fs::path a = testsupport::scratch("determinism_a"), b = testsupport::scratch("determinism_b");
  if (!pipeline(a) || !pipeline(b)) {
    report(false, 9, "pipeline run failed");
    return;
  }
  int compared = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext != ".json" && ext != ".bin") continue;
    ++compared;
    differing += slurp(e.path()) != slurp(b / fs::relative(e.path(), a));
  }
  report(differing == 0 && compared > 0, 9,
         fmt("two pipeline runs: %d of %d JSON/model files differ (0)", differing, compared));
}

}  // namespace

// --expect-fail N names a criterion whose failure is known and documented.
// The exit status is 0 only when exactly the named criteria fail.
int main(int argc, char** argv) {
  std::set<int> expected;
  for (int i = 1; i + 1 < argc; i += 2)
    if (std::string(argv[i]) == "--expect-fail") expected.insert(std::atoi(argv[i + 1]));
  hu_invariance();
  gradients();
  arcface_reduction();
  permutation_invariance();
  vectorization();
  segmentation();
  table_rows();
  determinism();
  if (!expected.empty()) std::printf("expected to fail: %zu criterion(s); observed %zu\n", expected.size(), failed.size());
  return failed == expected ? 0 : 1;
}
