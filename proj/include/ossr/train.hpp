#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ossr/augment.hpp"
#include "ossr/net.hpp"
#include "ossr/raster.hpp"
#include "ossr/segmenter.hpp"
#include "ossr/synthgen.hpp"
#include "ossr/tracer.hpp"

namespace ossr {

/// Front end shared by training and inference: binarization, tracing and
/// segmentation settings.
struct FrontEndParams {
  int window = 13;
  double offset = 10.0;
  TraceParams trace;
  SegmentParams segment;
};

struct TrainConfig {
  NetConfig net;  // classes is overwritten with the prototype count
  FrontEndParams front;
  AugmentPolicy augment;
  int augmentations = 200;  // per class and orientation
  int epochs = 100;
  int batch = 16;
  double lr = 1e-3;
  double momentum = 0.9;
  int points = kCloudPoints;
  int stub = 80;    // pipe length on each side of a staged prototype
  int stroke = 3;
  int margin = 40;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: OSSR_THREADS or hardware concurrency
  std::function<void(int epoch, double loss)> on_epoch;
};

struct TrainResult {
  ModelState<float> model;
  ClassDirectory directory;
  std::vector<double> epoch_loss;
};

/// Splices a glyph into a short horizontal pipe so it segments like a symbol
/// on a sheet. Returns the staged image and the glyph's bbox in it.
GrayImage stage_prototype(const BinaryImage& glyph, const TrainConfig& config, BBox* glyph_box = nullptr);

/// Region of a staged prototype: the segmented region overlapping the glyph
/// most, or every sampled point if segmentation finds none.
SymbolRegion prototype_region(const BinaryImage& glyph, const TrainConfig& config);

/// Worker count from OSSR_THREADS, falling back to hardware concurrency.
int worker_count(int requested = 0);

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

TrainResult train(const GlyphSet& prototypes, const TrainConfig& config);

/// Unit-norm embedding of a single cloud.
Vector<float> embed_cloud(const PointCloud& cloud, const ModelState<float>& model);

}  // namespace ossr
