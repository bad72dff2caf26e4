#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ossr/geometry.hpp"
#include "ossr/raster.hpp"

namespace ossr {

/// Class name -> binary glyph. Ports sit at the middle of the left and right
/// edges, so the glyph splices into a horizontal pipe as drawn.
using GlyphSet = std::map<std::string, BinaryImage>;

/// The ten bundled valve/instrument-like outline glyphs.
GlyphSet builtin_glyphs();

/// Loads every *.png / *.pgm in a directory; the file stem is the class name.
GlyphSet load_glyphs(const std::filesystem::path& dir);

/// Rotates clockwise (in image coordinates) by quarter_turns * 90 degrees.
BinaryImage rotate_quarter(const BinaryImage& img, int quarter_turns);

/// Nearest-neighbour resampling to round(w*factor) x round(h*factor).
BinaryImage scale_nearest(const BinaryImage& img, double factor);

struct SheetConfig {
  int width = 4000;
  int height = 2600;
  int grid = 200;          // pipe routing lattice pitch
  int pipes = 12;
  int symbols = 10;
  int stroke_min = 2;
  int stroke_max = 4;
  double scale_min = 0.9;
  double scale_max = 1.1;
  double clearance = 60.0;  // free space around a symbol
  double noise = 0.0002;    // salt-and-pepper flip probability
  int max_retries = 500;
};

struct PlacedSymbol {
  std::string class_name;
  BBox bbox;  // tight over stamped ink, pixel-edge coordinates
  int orientation = 0;  // degrees, one of 0/90/180/270
};

struct PipePolyline {
  std::vector<Vec2> vertices;  // orthogonal runs between lattice nodes
  int stroke = 2;
};

struct Sheet {
  GrayImage image;
  std::vector<PlacedSymbol> truth;
  std::vector<PipePolyline> pipes;
};

Sheet generate_sheet(const GlyphSet& glyphs, const SheetConfig& config, std::uint64_t seed);

/// Seed of sheet `index` in a batch started from `seed` (splitmix64 step).
std::uint64_t sheet_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace ossr
