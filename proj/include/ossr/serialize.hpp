#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ossr/evalkit.hpp"
#include "ossr/net.hpp"
#include "ossr/raster.hpp"
#include "ossr/recognizer.hpp"
#include "ossr/sampler.hpp"
#include "ossr/segmenter.hpp"
#include "ossr/synthgen.hpp"
#include "ossr/tracer.hpp"

namespace ossr {

inline constexpr int kSchemaVersion = 1;  // every JSON document carries this

/// Writes to a sibling temp file and renames it over the target.
void write_atomic(const std::filesystem::path& path, std::string_view bytes);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

nlohmann::json bbox_json(const BBox& b);
BBox bbox_from(const nlohmann::json& j);

nlohmann::json paths_json(const VectorPathSet& paths);
std::string paths_svg(const VectorPathSet& paths);
nlohmann::json sampled_json(const std::vector<SampledPath>& paths);

/// Regions in image coordinates plus the fitted line segments.
nlohmann::json segmentation_json(const SegmentResult& seg);
nlohmann::json recognitions_json(const std::string& sheet, const SheetRecognition& rec);

nlohmann::json truth_json(const std::vector<PlacedSymbol>& truth);
std::vector<PlacedSymbol> truth_from(const nlohmann::json& j);

nlohmann::json report_json(const MatchReport& report);

/// Model directory layout: manifest.json, params.bin (little-endian float32
/// blocks in ModelState::visit order, each row-major), directory.json.
void save_model(const std::filesystem::path& dir, const ModelState<float>& model, const ClassDirectory& directory,
                const nlohmann::json& extra = {});
void load_model(const std::filesystem::path& dir, ModelState<float>& model, ClassDirectory& directory);

struct OverlayBox {
  BBox bbox;
  std::string label;
  std::array<std::uint8_t, 3> color{255, 0, 0};
};
/// Grey page with coloured rectangles and small block-letter labels.
RgbImage render_overlay(const GrayImage& page, const std::vector<OverlayBox>& boxes);

}  // namespace ossr
