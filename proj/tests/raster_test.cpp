#include <doctest.h>

#include <fstream>
#include <random>

#include "ossr/error.hpp"
#include "ossr/raster.hpp"
#include "support.hpp"

using namespace ossr;

namespace {

// Straight-from-the-definition local mean with replicated borders.
BinaryImage brute_binarize(const GrayImage& img, int window, double offset) {
  BinaryImage out(img.width, img.height);
  const int r = window / 2;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      long sum = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          sum += img.at(std::clamp(x + dx, 0, img.width - 1), std::clamp(y + dy, 0, img.height - 1));
      const double mean = static_cast<double>(sum) / (window * window);
      out.set(x, y, img.at(x, y) < mean - offset);
    }
  return out;
}

}  // namespace

TEST_CASE("2x2 binary PGM decodes verbatim") {
  const auto dir = testsupport::scratch("pgm");
  {
    std::ofstream os(dir / "a.pgm", std::ios::binary);
    os << "P5\n2 2\n255\n";
    const unsigned char px[4] = {0, 255, 255, 0};
    os.write(reinterpret_cast<const char*>(px), 4);
  }
  const GrayImage img = load_image(dir / "a.pgm");
  CHECK(img == GrayImage(2, 2, {0, 255, 255, 0}));
}

TEST_CASE("PGM written by save_pgm round-trips") {
  const auto dir = testsupport::scratch("pgm_rt");
  GrayImage img(5, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i * 17);
  save_pgm(img, dir / "b.pgm");
  CHECK(load_image(dir / "b.pgm") == img);
  save_png(img, dir / "b.png");
  CHECK(load_image(dir / "b.png") == img);
}

TEST_CASE("load errors carry their kind") {
  const auto dir = testsupport::scratch("load_err");
  auto code_of = [](const std::filesystem::path& p) {
    try {
      load_image(p);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  CHECK(code_of(dir / "missing.png") == ErrorCode::FileNotFound);
  std::ofstream(dir / "x.txt") << "hello";
  CHECK(code_of(dir / "x.txt") == ErrorCode::UnsupportedFormat);
  std::ofstream(dir / "trunc.pgm") << "P5\n4 4\n255\nab";
  CHECK(code_of(dir / "trunc.pgm") == ErrorCode::CorruptImage);
}

TEST_CASE("uniform grey RGB PNG decodes to 128 everywhere") {
  // Fixture written by an external PNG encoder; its own decoder reads 128 for every pixel.
  const GrayImage img = load_image(testsupport::data_dir() / "gray128_rgb.png");
  CHECK(img.width == 7);
  CHECK(img.height == 5);
  for (auto v : img.data) CHECK(v == 128);
}

TEST_CASE("binarize degenerate inputs") {
  CHECK(binarize(GrayImage(20, 20, 128), 13, 5).count() == 0);
  CHECK(binarize(GrayImage(20, 20, 0), 13, 0).count() == 0);
  CHECK_THROWS_AS(binarize(GrayImage(20, 20), 12, 10), Error);
  CHECK_THROWS_AS(binarize(GrayImage(20, 20), 1, 10), Error);
}

TEST_CASE("binarize matches the brute-force window mean") {
  GrayImage sq(64, 64, 255);
  for (int y = 24; y < 40; ++y)
    for (int x = 24; x < 40; ++x) sq.at(x, y) = 0;
  const BinaryImage got = binarize(sq, 13, 10);
  CHECK(got == brute_binarize(sq, 13, 10));
  // No foreground outside the square. Deep inside a square wider than the
  // window the local mean is black too, so only a band along the edges fires.
  long outside = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (!(x >= 24 && x < 40 && y >= 24 && y < 40)) outside += got.at(x, y);
  CHECK(outside == 0);
  CHECK(got.at(24, 31));

  std::mt19937 rng(3);
  std::uniform_int_distribution<int> px(0, 255);
  GrayImage noise(37, 23);
  for (auto& v : noise.data) v = static_cast<std::uint8_t>(px(rng));
  for (int window : {3, 7, 13, 41}) CHECK(binarize(noise, window, 4) == brute_binarize(noise, window, 4));
}

TEST_CASE("binarize is local and idempotent on large blobs") {
  const BinaryImage blob = testsupport::rect(80, 80, 20, 20, 60, 60);
  CHECK(binarize(to_gray(binarize(to_gray(blob)))) == binarize(to_gray(blob)));

  GrayImage a(60, 60, 200);
  for (int y = 10; y < 30; ++y)
    for (int x = 10; x < 30; ++x) a.at(x, y) = 30;
  GrayImage b = a;
  b.at(55, 55) = 0;  // farther than one window from (20, 20)
  const BinaryImage ma = binarize(a), mb = binarize(b);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) CHECK(ma.at(x, y) == mb.at(x, y));
}
