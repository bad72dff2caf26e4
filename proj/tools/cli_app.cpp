#include "cli_app.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <iostream>

#include "ossr/config.hpp"
#include "ossr/error.hpp"
#include "ossr/evalkit.hpp"
#include "ossr/recognizer.hpp"
#include "ossr/serialize.hpp"
#include "ossr/synthgen.hpp"
#include "ossr/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ossr {

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  long long seed = -1;
  int threads = 0;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "override a config value, e.g. --set segment.beta=2");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--threads", threads, "worker threads (default: OSSR_THREADS or all cores)");
  }

  PipelineConfig resolve() const {
    auto ov = overrides;
    if (seed >= 0) ov.push_back("seed=" + std::to_string(seed));
    if (threads > 0) {
      ov.push_back("train.threads=" + std::to_string(threads));
      ov.push_back("recognize.threads=" + std::to_string(threads));
    }
    return resolve_config(config_file, ov);
  }
};

GlyphSet prototypes(const std::string& dir) { return dir.empty() || dir == "builtin" ? builtin_glyphs() : load_glyphs(dir); }

std::vector<fs::path> images_in(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        const auto ext = e.path().extension();
        if (ext == ".png" || ext == ".pgm") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(in);
    }
  }
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "no input images");
  return out;
}

std::array<std::uint8_t, 3> palette(std::size_t i) {
  static const std::array<std::array<std::uint8_t, 3>, 6> p = {
      {{220, 20, 60}, {0, 120, 220}, {0, 160, 60}, {200, 120, 0}, {150, 0, 180}, {0, 150, 150}}};
  return p[i % p.size()];
}

void log(const std::string& msg) { std::cerr << msg << '\n'; }

int run_trace(const Common& common, const std::string& image, const std::string& out, const std::string& svg) {
  const PipelineConfig cfg = common.resolve();
  const GrayImage img = load_image(image);
  const VectorPathSet traced = trace(binarize(img, cfg.front.window, cfg.front.offset), cfg.front.trace);
  json j = paths_json(traced);
  j["config"] = to_json(cfg);
  if (!out.empty()) write_json(out, j);
  if (!svg.empty()) write_atomic(svg, paths_svg(traced));
  log("traced " + std::to_string(traced.paths.size()) + " paths, " + std::to_string(traced.loop_count()) + " loops");
  return 0;
}

int run_segment(const Common& common, const std::string& image, const std::string& out, const std::string& overlay,
                const std::string& sampled) {
  const PipelineConfig cfg = common.resolve();
  const GrayImage img = load_image(image);
  const VectorPathSet traced = trace(binarize(img, cfg.front.window, cfg.front.offset), cfg.front.trace);
  const SegmentResult seg = segment(traced, cfg.front.segment);
  json j = segmentation_json(seg);
  j["schema_version"] = kSchemaVersion;
  j["sheet"] = fs::path(image).stem().string();
  j["config"] = to_json(cfg);
  if (!out.empty()) write_json(out, j);
  if (!sampled.empty()) write_json(sampled, sampled_json(seg.merged));
  if (!overlay.empty()) {
    std::vector<OverlayBox> boxes;
    for (const auto& r : seg.regions)
      boxes.push_back({seg.image_bbox(r), std::to_string(r.region_id) + std::string(to_string(r.origin)).substr(0, 1),
                       palette(static_cast<std::size_t>(r.origin))});
    const auto png = render_overlay(img, boxes);
    const fs::path tmp = fs::path(overlay).string() + ".part.png";
    save_png(png, tmp);
    fs::rename(tmp, overlay);
  }
  log(std::to_string(seg.regions.size()) + " regions, " + std::to_string(seg.lines.size()) + " line segments");
  return 0;
}

int run_train(const Common& common, const std::string& classes, const std::string& out) {
  const PipelineConfig cfg = common.resolve();
  TrainConfig tc = cfg.train_config();
  const auto start = std::chrono::steady_clock::now();
  tc.on_epoch = [&](int epoch, double loss) {
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char buf[96];
    std::snprintf(buf, sizeof buf, "epoch %d/%d loss %.6f (%.0fs)", epoch + 1, tc.epochs, loss, sec);
    log(buf);
  };
  const TrainResult res = train(prototypes(classes), tc);
  save_model(out, res.model, res.directory, {{"config", to_json(cfg)}, {"epoch_loss", res.epoch_loss}});
  log("model written to " + out);
  return 0;
}

int run_recognize(const Common& common, const std::vector<std::string>& inputs, const std::string& model_dir,
                  const std::string& out, const std::string& overlay, double min_score) {
  PipelineConfig cfg = common.resolve();
  if (min_score > -2) cfg.recognize.min_score = min_score;
  ModelState<float> model;
  ClassDirectory directory;
  load_model(model_dir, model, directory);
  const auto images = images_in(inputs);
  const bool single_file = images.size() == 1 && fs::path(out).extension() == ".json";
  for (const auto& path : images) {
    const GrayImage img = load_image(path);
    const SheetRecognition rec = recognize_sheet(img, model, directory, cfg.recognize_params());
    json j = recognitions_json(path.stem().string(), rec);
    j["config"] = to_json(cfg);
    write_json(single_file ? fs::path(out) : fs::path(out) / (path.stem().string() + ".json"), j);
    if (!overlay.empty()) {
      std::vector<OverlayBox> boxes;
      for (const auto& r : rec.recognitions) boxes.push_back({r.bbox, r.class_name, palette(0)});
      const fs::path target = images.size() == 1 && fs::path(overlay).extension() == ".png"
                                  ? fs::path(overlay)
                                  : fs::path(overlay) / (path.stem().string() + ".png");
      if (target.has_parent_path()) fs::create_directories(target.parent_path());
      const fs::path tmp = target.string() + ".part.png";
      save_png(render_overlay(img, boxes), tmp);
      fs::rename(tmp, target);
    }
    log(path.stem().string() + ": " + std::to_string(rec.recognitions.size()) + " regions");
  }
  return 0;
}

int run_synth(const Common& common, const std::string& classes, int sheets, const std::string& out,
              const std::string& glyph_dir) {
  const PipelineConfig cfg = common.resolve();
  const GlyphSet glyphs = prototypes(classes);
  if (!glyph_dir.empty()) {
    fs::create_directories(glyph_dir);
    for (const auto& [name, g] : glyphs) save_png(to_gray(g), fs::path(glyph_dir) / (name + ".png"));
  }
  fs::create_directories(out);
  for (int i = 0; i < sheets; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "sheet_%03d", i);
    const Sheet sheet = generate_sheet(glyphs, cfg.synth, sheet_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    const fs::path png = fs::path(out) / (std::string(stem) + ".png");
    const fs::path tmp = png.string() + ".part.png";
    save_png(sheet.image, tmp);
    fs::rename(tmp, png);
    json gt = truth_json(sheet.truth);
    gt["sheet"] = stem;
    gt["config"] = to_json(cfg);
    write_json(fs::path(out) / (std::string(stem) + ".json"), gt);
  }
  log("wrote " + std::to_string(sheets) + " sheets to " + out);
  return 0;
}

int run_eval(const Common& common, const std::string& pred_dir, const std::string& gt_dir, const std::string& out) {
  const PipelineConfig cfg = common.resolve();
  std::vector<fs::path> gts;
  for (const auto& e : fs::directory_iterator(gt_dir))
    if (e.path().extension() == ".json") gts.push_back(e.path());
  std::sort(gts.begin(), gts.end());
  if (gts.empty()) throw Error(ErrorCode::EmptyInput, "no ground-truth JSON in " + gt_dir);
  std::vector<MatchReport> reports;
  json sheets = json::array();
  for (const auto& g : gts) {
    const fs::path p = fs::path(pred_dir) / g.filename();
    if (!fs::exists(p)) throw Error(ErrorCode::FileNotFound, "no prediction for " + g.filename().string());
    std::vector<Labeled> truth, pred;
    for (const auto& s : truth_from(read_json(g))) truth.push_back({s.class_name, s.bbox});
    const json recognized = read_json(p);  // a range-for over a member of a temporary would dangle
    for (const auto& r : recognized.at("recognitions"))
      pred.push_back({r.at("class").get<std::string>(), bbox_from(r.at("bbox"))});
    reports.push_back(evaluate(pred, truth, cfg.iou_threshold));
    sheets.push_back({{"sheet", g.stem().string()},
                      {"correct", reports.back().correct},
                      {"false", reports.back().false_regions},
                      {"missing", reports.back().missing}});
  }
  const MatchReport total = aggregate(reports);
  json j = report_json(total);
  j["sheets"] = std::move(sheets);
  j["config"] = to_json(cfg);
  if (!out.empty()) write_json(out, j);
  std::cout << format_table(total);
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"One-shot symbol recognition for piping and instrumentation sheets"};
  app.require_subcommand(1);
  Common common;

  std::string image, out, svg, overlay, sampled, classes, model_dir, glyph_dir, pred, gt;
  std::vector<std::string> inputs;
  int sheets = 20;
  double min_score = -3;

  auto* tr = app.add_subcommand("trace", "vectorize a raster sheet");
  common.attach(tr);
  tr->add_option("image", image, "input PNG/PGM")->required();
  tr->add_option("--out", out, "paths JSON");
  tr->add_option("--svg", svg, "SVG rendering of the traced paths");

  auto* sg = app.add_subcommand("segment", "segregate pipelines from symbol regions");
  common.attach(sg);
  sg->add_option("image", image, "input PNG/PGM")->required();
  sg->add_option("--out", out, "regions JSON");
  sg->add_option("--overlay", overlay, "PNG with region boxes");
  sg->add_option("--sampled", sampled, "sampled points JSON");

  auto* tn = app.add_subcommand("train", "train from one prototype image per class");
  common.attach(tn);
  tn->add_option("--classes", classes, "directory of prototype images, or 'builtin'")->default_val("builtin");
  tn->add_option("--out", out, "model directory")->required();

  auto* rc = app.add_subcommand("recognize", "recognize symbols on sheets");
  common.attach(rc);
  rc->add_option("images", inputs, "sheet images or directories")->required();
  rc->add_option("--model", model_dir, "model directory")->required();
  rc->add_option("--out", out, "results directory, or a .json file for a single sheet")->required();
  rc->add_option("--overlay", overlay, "overlay directory, or a .png file for a single sheet");
  rc->add_option("--min-score", min_score, "regions scoring below this become 'unknown'");

  auto* sy = app.add_subcommand("synth", "generate synthetic sheets with ground truth");
  common.attach(sy);
  sy->add_option("--classes", classes, "directory of glyph images, or 'builtin'")->default_val("builtin");
  sy->add_option("--sheets", sheets, "number of sheets")->check(CLI::NonNegativeNumber);
  sy->add_option("--out", out, "output directory")->required();
  sy->add_option("--export-glyphs", glyph_dir, "also write the glyph set as PNGs here");

  auto* ev = app.add_subcommand("eval", "score recognitions against ground truth");
  common.attach(ev);
  ev->add_option("--pred", pred, "directory of recognition JSON")->required();
  ev->add_option("--gt", gt, "directory of ground-truth JSON")->required();
  ev->add_option("--out", out, "report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*tr) return run_trace(common, image, out, svg);
    if (*sg) return run_segment(common, image, out, overlay, sampled);
    if (*tn) return run_train(common, classes, out);
    if (*rc) return run_recognize(common, inputs, model_dir, out, overlay, min_score);
    if (*sy) return run_synth(common, classes, sheets, out, glyph_dir);
    if (*ev) return run_eval(common, pred, gt, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::FileNotFound:
      case ErrorCode::UnsupportedFormat:
      case ErrorCode::CorruptImage:
      case ErrorCode::InvalidConfig:
      case ErrorCode::UsageError:
      case ErrorCode::EmptyInput:
      case ErrorCode::InsufficientClasses:
      case ErrorCode::PlacementOverflow:
      case ErrorCode::InvalidMargin:
      case ErrorCode::KTooLarge:
        return 1;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace ossr
