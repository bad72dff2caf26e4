#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "ossr/net.hpp"
#include "ossr/segmenter.hpp"
#include "ossr/train.hpp"

namespace ossr {

inline constexpr int kVariants = 8;  // 2 scales x 4 orientations

struct Recognition {
  int region_id = 0;
  BBox bbox;  // image coordinates
  std::string class_name;
  double score = 0.0;  // mean cosine of the winning votes
  std::array<std::string, kVariants> votes;
  std::array<double, kVariants> vote_cosines{};
};

struct RecognizeParams {
  FrontEndParams front;
  std::array<double, 2> widths{300.0, 600.0};  // region bbox width per scale variant
  int points = kCloudPoints;
  double min_score = -2.0;  // below this the class becomes "unknown"; default never triggers
  int threads = 0;
};

/// Extension point for a second embedding concatenated to the graph
/// embedding. The default has dimension 0 and contributes nothing.
struct AuxiliaryEmbedding {
  int dim = 0;
  std::function<Vector<float>(const SymbolRegion&)> embed;
};

/// 8 unit-norm embeddings, scale-major then rotation (0, 90, 180, 270).
std::vector<Vector<float>> embed_region(const SymbolRegion& region, const ModelState<float>& model,
                                        const RecognizeParams& params = {}, const AuxiliaryEmbedding& aux = {});

/// Majority vote of nearest directory entries by cosine.
Recognition classify(const std::vector<Vector<float>>& embeddings, const ClassDirectory& directory);

struct SheetRecognition {
  SegmentResult segmentation;
  std::vector<Recognition> recognitions;  // one per region, ordered by region id
};

SheetRecognition recognize_sheet(const GrayImage& image, const ModelState<float>& model,
                                 const ClassDirectory& directory, const RecognizeParams& params = {},
                                 const AuxiliaryEmbedding& aux = {});

}  // namespace ossr
