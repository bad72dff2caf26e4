#include <doctest.h>

#include <filesystem>

#include "ossr/error.hpp"
#include "ossr/serialize.hpp"
#include "support.hpp"

using namespace ossr;
using nlohmann::json;

TEST_CASE("json files are written atomically and read back") {
  const auto dir = testsupport::scratch("serialize_json");
  const json j = {{"a", 1}, {"b", {1.5, 2.5}}};
  write_json(dir / "x.json", j);
  CHECK(read_json(dir / "x.json") == j);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 1);  // no temp file left behind
  CHECK_THROWS_AS(read_json(dir / "none.json"), Error);
  write_atomic(dir / "bad.json", "{oops");
  CHECK_THROWS_AS(read_json(dir / "bad.json"), Error);
}

TEST_CASE("bbox and ground truth round trip") {
  const BBox b{1.5, 2, 30.25, 40};
  const BBox r = bbox_from(bbox_json(b));
  CHECK(r.x0 == b.x0);
  CHECK(r.y1 == b.y1);
  CHECK_THROWS_AS(bbox_from(json::array({1, 2, 3})), Error);

  const std::vector<PlacedSymbol> truth{{"gate", {10, 20, 60, 80}, 90}, {"circle", {100, 100, 140, 150}, 0}};
  const json tj = truth_json(truth);
  CHECK(tj["schema_version"] == kSchemaVersion);
  const auto back = truth_from(tj);
  REQUIRE(back.size() == 2);
  CHECK(back[0].class_name == "gate");
  CHECK(back[0].orientation == 90);
  CHECK(back[1].bbox.x1 == 140);
  CHECK_THROWS_AS(truth_from(json{{"symbols", 3}}), Error);
}

TEST_CASE("model round trip") {
  const auto dir = testsupport::scratch("serialize_model");
  NetConfig cfg;
  cfg.classes = 3;
  cfg.widths = {8, 8, 16};
  cfg.hidden = 20;
  cfg.embed = 12;
  const ModelState<float> m = ModelState<double>::initialize(cfg, 4).cast<float>();
  ClassDirectory d;
  d.classes = {"a", "b", "c"};
  for (int i = 0; i < 3; ++i) d.entries.push_back({d.classes[static_cast<std::size_t>(i)], 90 * i, m.arc.col(i)});
  save_model(dir, m, d, {{"note", "test"}});
  CHECK(std::filesystem::file_size(dir / "params.bin") == 4 * m.parameter_count());

  ModelState<float> lm;
  ClassDirectory ld;
  load_model(dir, lm, ld);
  CHECK(lm.config.k == cfg.k);
  CHECK(lm.config.embed == 12);
  CHECK(lm.config.s == cfg.s);
  CHECK(lm.config.margin == cfg.margin);
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(lm.layers[l].theta == m.layers[l].theta);
    CHECK(lm.layers[l].phi == m.layers[l].phi);
    CHECK(lm.layers[l].bias == m.layers[l].bias);
  }
  CHECK(lm.w1 == m.w1);
  CHECK(lm.b2 == m.b2);
  CHECK(lm.arc == m.arc);
  CHECK(ld.classes == d.classes);
  REQUIRE(ld.entries.size() == 3);
  CHECK(ld.entries[2].orientation == 180);
  CHECK(ld.entries[1].embedding == d.entries[1].embedding);
  CHECK(read_json(dir / "manifest.json")["run"]["note"] == "test");

  // A truncated blob is rejected.
  write_atomic(dir / "params.bin", "abcd");
  CHECK_THROWS_AS(load_model(dir, lm, ld), Error);
  CHECK_THROWS_AS(load_model(dir / "absent", lm, ld), Error);
}

TEST_CASE("documents carry a schema version") {
  VectorPathSet v = trace(binarize(to_gray(testsupport::rect(40, 40, 10, 10, 30, 30))));
  CHECK(paths_json(v)["schema_version"] == kSchemaVersion);
  CHECK(paths_svg(v).find("<svg") != std::string::npos);
  CHECK(report_json(MatchReport{})["schema_version"] == kSchemaVersion);
  SheetRecognition rec;
  CHECK(recognitions_json("s", rec)["schema_version"] == kSchemaVersion);
  CHECK(recognitions_json("s", rec)["recognitions"].empty());
}

TEST_CASE("overlay") {
  const GrayImage page(50, 40);
  const RgbImage o = render_overlay(page, {{BBox{5, 5, 20, 20}, "x"}});
  CHECK(o.width == 50);
  CHECK(o.height == 40);
  // The box outline is drawn in its colour.
  CHECK(o.data[(5 * 50 + 10) * 3] == 255);
  CHECK(o.data[(5 * 50 + 10) * 3 + 1] == 0);
}
