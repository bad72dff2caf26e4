#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ossr {

/// Row-major 8-bit luminance image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 255);
  GrayImage(int w, int h, std::vector<std::uint8_t> pixels);

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const GrayImage&) const = default;
};

/// Row-major foreground mask; true means dark ink.
struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;  // 0 or 1

  BinaryImage() = default;
  BinaryImage(int w, int h, bool fill = false);

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool at(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x] != 0; }
  /// Out-of-bounds pixels read as background.
  bool get(int x, int y) const { return in_bounds(x, y) && at(x, y); }
  void set(int x, int y, bool v) { mask[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const;
  bool operator==(const BinaryImage&) const = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // r,g,b interleaved

  RgbImage(int w, int h);
  explicit RgbImage(const GrayImage& g);
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

/// Decodes PNG (any bit depth / colour type) or binary/ASCII PGM. Colour is
/// reduced with Rec.601 luma weights after compositing alpha over white.
GrayImage load_image(const std::filesystem::path& path);

/// Mean-based adaptive threshold with edge-replicated borders: a pixel is
/// foreground iff value < local_mean - offset.
BinaryImage binarize(const GrayImage& img, int window = 13, double offset = 10.0);

GrayImage to_gray(const BinaryImage& bin);  // foreground black, background white

void save_png(const GrayImage& img, const std::filesystem::path& path);
void save_png(const RgbImage& img, const std::filesystem::path& path);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

}  // namespace ossr
