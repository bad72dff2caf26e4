#pragma once

#include <cmath>
#include <filesystem>
#include <functional>

#include "ossr/raster.hpp"
#include "ossr/tracer.hpp"

namespace testsupport {

inline ossr::BinaryImage paint(int w, int h, const std::function<bool(int, int)>& inside) {
  ossr::BinaryImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, inside(x, y));
  return img;
}

inline ossr::BinaryImage rect(int w, int h, int x0, int y0, int x1, int y1) {
  return paint(w, h, [=](int x, int y) { return x >= x0 && x < x1 && y >= y0 && y < y1; });
}

inline ossr::BinaryImage disk(int w, int h, double cx, double cy, double r) {
  return paint(w, h, [=](int x, int y) { return std::hypot(x + 0.5 - cx, y + 0.5 - cy) < r; });
}

inline double mask_iou(const ossr::BinaryImage& a, const ossr::BinaryImage& b) {
  long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.mask.size(); ++i) {
    inter += a.mask[i] && b.mask[i];
    uni += a.mask[i] || b.mask[i];
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
}

inline std::filesystem::path data_dir() { return OSSR_TEST_DATA; }

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ossr_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testsupport
