#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ossr/recognizer.hpp"
#include "ossr/serialize.hpp"
#include "ossr/synthgen.hpp"
#include "ossr/train.hpp"

namespace ossr {


/// Every tunable of the pipeline. Resolution order: defaults, then a JSON
/// config file, then command-line overrides.
struct PipelineConfig {
  FrontEndParams front;
  TrainConfig train;  // its `front` is replaced by the shared one on use
  RecognizeParams recognize;
  SheetConfig synth;
  double iou_threshold = 0.5;
  std::uint64_t seed = 7;

  TrainConfig train_config() const;
  RecognizeParams recognize_params() const;
};

nlohmann::json to_json(const PipelineConfig& cfg);

/// Throws InvalidConfig on unknown keys, wrong types or out-of-range values.
PipelineConfig from_json(const nlohmann::json& j);

/// Merges `patch` into `base`; every key of patch must already exist in base.
void merge_strict(nlohmann::json& base, const nlohmann::json& patch, const std::string& where = "");

/// Applies "a.b.c=value" overrides; value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

PipelineConfig resolve_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

void validate(const PipelineConfig& cfg);

}  // namespace ossr
