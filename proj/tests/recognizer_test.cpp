#include <doctest.h>

#include <algorithm>

#include "ossr/error.hpp"
#include "ossr/recognizer.hpp"

using namespace ossr;

namespace {

const TrainResult& small_model() {
  static const TrainResult r = [] {
    const GlyphSet all = builtin_glyphs();
    TrainConfig cfg;
    cfg.augmentations = 4;
    cfg.epochs = 6;
    return train({{"circle", all.at("circle")}, {"gate", all.at("gate")}, {"square", all.at("square")}}, cfg);
  }();
  return r;
}

Vector<float> unit(std::initializer_list<float> v) {
  Vector<float> e(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (float x : v) e(i++) = x;
  return e.normalized();
}

}  // namespace

TEST_CASE("embed_region gives eight unit embeddings") {
  const auto& m = small_model();
  const SymbolRegion region = prototype_region(builtin_glyphs().at("gate"), TrainConfig{});
  const auto e = embed_region(region, m.model);
  REQUIRE(e.size() == 8);
  for (const auto& v : e) CHECK(std::abs(v.norm() - 1.0f) < 1e-5f);
  // Features are scale normalized, so the two scales differ only by resampling.
  for (int t = 0; t < 4; ++t) CHECK(e[static_cast<std::size_t>(t)].dot(e[static_cast<std::size_t>(t + 4)]) > 0.99f);

  SymbolRegion turned = region;
  for (auto& p : turned.points) p = {-p.y, p.x};
  const auto r = embed_region(turned, m.model);
  for (int t = 0; t < 4; ++t)
    CHECK(r[static_cast<std::size_t>(t)].dot(e[static_cast<std::size_t>((t + 1) % 4)]) > 0.99f);

  CHECK_THROWS_AS(embed_region(SymbolRegion{}, m.model), Error);
}

TEST_CASE("classify voting rules") {
  ClassDirectory one;
  one.classes = {"only"};
  one.entries.push_back({"only", 0, unit({1, 0, 0})});
  std::vector<Vector<float>> e(8, unit({0, 1, 0}));
  const Recognition r = classify(e, one);
  CHECK(r.class_name == "only");
  CHECK(std::count(r.votes.begin(), r.votes.end(), "only") == 8);
  CHECK_THROWS_AS(classify(e, ClassDirectory{}), Error);

  // Four votes each; "b" has the higher mean cosine although "a" sorts first.
  ClassDirectory two;
  two.classes = {"a", "b"};
  two.entries.push_back({"a", 0, unit({1, 0, 0})});
  two.entries.push_back({"b", 0, unit({0, 1, 0})});
  const float ca = 0.8f, cb = 0.9f;
  std::vector<Vector<float>> split;
  for (int i = 0; i < 4; ++i) split.push_back(unit({ca, 0, std::sqrt(1 - ca * ca)}));
  for (int i = 0; i < 4; ++i) split.push_back(unit({0, cb, std::sqrt(1 - cb * cb)}));
  const Recognition t = classify(split, two);
  CHECK(t.class_name == "b");
  CHECK(t.score == doctest::Approx(0.9).epsilon(1e-6));
  std::reverse(split.begin(), split.end());
  CHECK(classify(split, two).class_name == "b");

  // Full tie falls to the lexicographically first name.
  std::vector<Vector<float>> even;
  for (int i = 0; i < 4; ++i) even.push_back(unit({1, 0, 1}));
  for (int i = 0; i < 4; ++i) even.push_back(unit({0, 1, 1}));
  CHECK(classify(even, two).class_name == "a");
}

TEST_CASE("prototypes retrieve themselves") {
  const auto& m = small_model();
  const GlyphSet all = builtin_glyphs();
  for (const auto& name : m.directory.classes) {
    CAPTURE(name);
    const Recognition r = classify(embed_region(prototype_region(all.at(name), TrainConfig{}), m.model), m.directory);
    CHECK(r.class_name == name);
    CHECK(r.score > 0.99);
  }
}

TEST_CASE("recognize_sheet") {
  const auto& m = small_model();
  GrayImage blank(400, 300);
  CHECK(recognize_sheet(blank, m.model, m.directory).recognitions.empty());

  SheetConfig cfg;
  cfg.width = 1600;
  cfg.height = 1200;
  cfg.pipes = 5;
  cfg.symbols = 3;
  const GlyphSet all = builtin_glyphs();
  const Sheet sheet =
      generate_sheet({{"circle", all.at("circle")}, {"gate", all.at("gate")}, {"square", all.at("square")}}, cfg, 4);
  const SheetRecognition a = recognize_sheet(sheet.image, m.model, m.directory);
  const SheetRecognition b = recognize_sheet(sheet.image, m.model, m.directory);
  REQUIRE(a.recognitions.size() == a.segmentation.regions.size());
  for (std::size_t i = 0; i < a.recognitions.size(); ++i) {
    CHECK(a.recognitions[i].region_id == a.segmentation.regions[i].region_id);
    CHECK(a.recognitions[i].class_name == b.recognitions[i].class_name);
    CHECK(a.recognitions[i].score == b.recognitions[i].score);
    CHECK(std::isfinite(a.recognitions[i].score));
  }
}
