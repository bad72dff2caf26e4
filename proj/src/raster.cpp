#include "ossr/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ossr/error.hpp"

namespace ossr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptImage: return "CorruptImage";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::DegenerateContour: return "DegenerateContour";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidMargin: return "InvalidMargin";
    case ErrorCode::InsufficientClasses: return "InsufficientClasses";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::EmptyDirectory: return "EmptyDirectory";
    case ErrorCode::PlacementOverflow: return "PlacementOverflow";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

GrayImage::GrayImage(int w, int h, std::vector<std::uint8_t> pixels)
    : width(w), height(h), data(std::move(pixels)) {
  if (w <= 0 || h <= 0 || data.size() != static_cast<std::size_t>(w) * h)
    throw Error(ErrorCode::CorruptImage, "pixel buffer does not match dimensions");
}

BinaryImage::BinaryImage(int w, int h, bool fill)
    : width(w), height(h), mask(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

std::size_t BinaryImage::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

RgbImage::RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 255) {}

RgbImage::RgbImage(const GrayImage& g) : RgbImage(g.width, g.height) {
  for (std::size_t i = 0; i < g.data.size(); ++i) data[3 * i] = data[3 * i + 1] = data[3 * i + 2] = g.data[i];
}

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
  data[i] = r;
  data[i + 1] = g;
  data[i + 2] = b;
}

namespace {

std::uint8_t luma(unsigned r, unsigned g, unsigned b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

GrayImage decode_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw Error(ErrorCode::CorruptImage, path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::CorruptImage, path.string() + ": " + msg);
  }
  const int w = static_cast<int>(image.width), h = static_cast<int>(image.height);
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const unsigned a = rgba[4 * i + 3];
    auto over_white = [a](unsigned c) { return (c * a + 255u * (255u - a) + 127u) / 255u; };
    gray[i] = luma(over_white(rgba[4 * i]), over_white(rgba[4 * i + 1]), over_white(rgba[4 * i + 2]));
  }
  return GrayImage(w, h, std::move(gray));
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
bool next_token(const std::string& buf, std::size_t& pos, std::string& tok) {
  tok.clear();
  while (pos < buf.size()) {
    const char c = buf[pos];
    if (c == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) tok += buf[pos++];
  return !tok.empty();
}

GrayImage decode_pgm(const std::string& buf, const std::filesystem::path& path) {
  const bool binary = buf[1] == '5';
  std::size_t pos = 2;
  std::string tok;
  long vals[3];
  for (long& v : vals) {
    if (!next_token(buf, pos, tok)) throw Error(ErrorCode::CorruptImage, path.string() + ": truncated PGM header");
    try {
      v = std::stol(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::CorruptImage, path.string() + ": bad PGM header token '" + tok + "'");
    }
  }
  const long w = vals[0], h = vals[1], maxval = vals[2];
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535 || w * h > (1L << 31))
    throw Error(ErrorCode::CorruptImage, path.string() + ": invalid PGM dimensions");
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w * h));
  auto scale = [maxval](long v) {
    return static_cast<std::uint8_t>(maxval == 255 ? v : std::lround(255.0 * std::min(v, maxval) / maxval));
  };
  if (binary) {
    ++pos;  // single whitespace after maxval
    const std::size_t bps = maxval < 256 ? 1 : 2;
    if (buf.size() < pos + px.size() * bps) throw Error(ErrorCode::CorruptImage, path.string() + ": truncated PGM data");
    for (std::size_t i = 0; i < px.size(); ++i) {
      long v = static_cast<unsigned char>(buf[pos + i * bps]);
      if (bps == 2) v = (v << 8) | static_cast<unsigned char>(buf[pos + i * bps + 1]);
      px[i] = scale(v);
    }
  } else {
    for (auto& p : px) {
      if (!next_token(buf, pos, tok)) throw Error(ErrorCode::CorruptImage, path.string() + ": truncated PGM data");
      p = scale(std::stol(tok));
    }
  }
  return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

}  // namespace

GrayImage load_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw Error(ErrorCode::FileNotFound, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (buf.size() >= 8 && std::memcmp(buf.data(), kPngSig, 8) == 0) return decode_png(path);
  if (buf.size() >= 2 && buf[0] == 'P' && (buf[1] == '5' || buf[1] == '2')) return decode_pgm(buf, path);
  throw Error(ErrorCode::UnsupportedFormat, path.string());
}

BinaryImage binarize(const GrayImage& img, int window, double offset) {
  if (window < 3 || window % 2 == 0) throw Error(ErrorCode::InvalidWindow, "window must be odd and >= 3");
  if (img.width <= 0 || img.height <= 0) throw Error(ErrorCode::EmptyInput, "empty image");
  const int r = window / 2;
  const int pw = img.width + 2 * r, ph = img.height + 2 * r;
  // Integral image over the edge-replicated padding.
  std::vector<std::int64_t> sat(static_cast<std::size_t>(pw + 1) * (ph + 1), 0);
  auto S = [&](int x, int y) -> std::int64_t& { return sat[static_cast<std::size_t>(y) * (pw + 1) + x]; };
  for (int y = 0; y < ph; ++y) {
    const int sy = std::clamp(y - r, 0, img.height - 1);
    std::int64_t row = 0;
    for (int x = 0; x < pw; ++x) {
      const int sx = std::clamp(x - r, 0, img.width - 1);
      row += img.at(sx, sy);
      S(x + 1, y + 1) = S(x + 1, y) + row;
    }
  }
  const double area = static_cast<double>(window) * window;
  BinaryImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      // Padded coordinates of the window are [x, x+window) x [y, y+window).
      const std::int64_t sum = S(x + window, y + window) - S(x, y + window) - S(x + window, y) + S(x, y);
      const double v = img.at(x, y);
      if (v * area < static_cast<double>(sum) - offset * area) out.set(x, y, true);
    }
  }
  return out;
}

GrayImage to_gray(const BinaryImage& bin) {
  GrayImage g(bin.width, bin.height, 255);
  for (std::size_t i = 0; i < bin.mask.size(); ++i)
    if (bin.mask[i]) g.data[i] = 0;
  return g;
}

namespace {
void write_png(const std::filesystem::path& path, int w, int h, png_uint_32 format, const void* data) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr))
    throw Error(ErrorCode::IoError, path.string() + ": " + image.message);
}
}  // namespace

void save_png(const GrayImage& img, const std::filesystem::path& path) {
  write_png(path, img.width, img.height, PNG_FORMAT_GRAY, img.data.data());
}

void save_png(const RgbImage& img, const std::filesystem::path& path) {
  write_png(path, img.width, img.height, PNG_FORMAT_RGB, img.data.data());
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
}

}  // namespace ossr
