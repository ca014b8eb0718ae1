#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "vlut/image.hpp"
#include "vlut/rng.hpp"

using namespace vlut;

namespace {

ImageTensor random_quantized_image(Rng& rng, int h, int w) {
  ImageTensor img(h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.plane[c](y, x) = rng.uniform_int(256) / 255.0;
  return img;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE_BEGIN("image");

TEST_CASE("resize of a constant image is constant") {
  ImageTensor img(8, 8);
  for (auto& p : img.plane) p.setConstant(0.25);
  ImageTensor out = bilinear_resize(img, 5, 13);
  for (const auto& p : out.plane) {
    CHECK(p.minCoeff() == doctest::Approx(0.25));
    CHECK(p.maxCoeff() == doctest::Approx(0.25));
  }
}

TEST_CASE("identity resize returns the same pixels") {
  Rng rng(41);
  ImageTensor img = random_quantized_image(rng, 6, 7);
  ImageTensor out = bilinear_resize(img, 6, 7);
  for (int c = 0; c < 3; ++c) CHECK(out.plane[c].isApprox(img.plane[c], 1e-12));
}

TEST_CASE("2x downsample averages 2x2 blocks") {
  ImageTensor img(4, 4);
  // one bright 2x2 block in the top-left corner
  fill_rect(img, 0, 0, 2, 2, {1.0, 1.0, 1.0});
  ImageTensor out = bilinear_resize(img, 2, 2);
  CHECK(out.plane[0](0, 0) == doctest::Approx(1.0));
  CHECK(out.plane[0](0, 1) == doctest::Approx(0.0));
  CHECK(out.plane[0](1, 1) == doctest::Approx(0.0));
}

TEST_CASE("grayscale weights sum to one") {
  ImageTensor img(3, 3);
  for (auto& p : img.plane) p.setConstant(1.0);
  Mat g = rgb_to_gray(img);
  CHECK(g(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("crop fully inside the frame reproduces the region") {
  ImageTensor img(16, 16);
  fill_rect(img, 4, 4, 12, 12, {0.8, 0.2, 0.4});
  // crop exactly that 8x8 region at its native resolution
  ImageTensor crop = crop_resize(img, 8.0, 8.0, 8.0, 8, {0, 0, 0});
  CHECK(crop.plane[0](4, 4) == doctest::Approx(0.8));
  CHECK(crop.plane[1](4, 4) == doctest::Approx(0.2));
  CHECK(crop.plane[2](4, 4) == doctest::Approx(0.4));
}

TEST_CASE("crop outside the frame uses the fill color, no crash") {
  ImageTensor img(8, 8);
  for (auto& p : img.plane) p.setConstant(0.5);
  ImageTensor crop = crop_resize(img, -100.0, -100.0, 16.0, 8, {0.1, 0.2, 0.3});
  CHECK(crop.plane[0](0, 0) == doctest::Approx(0.1));
  CHECK(crop.plane[1](3, 3) == doctest::Approx(0.2));
  CHECK(crop.plane[2](7, 7) == doctest::Approx(0.3));
}

TEST_CASE("crop straddling the border mixes frame and fill") {
  ImageTensor img(8, 8);
  for (auto& p : img.plane) p.setConstant(1.0);
  ImageTensor crop = crop_resize(img, 0.0, 4.0, 8.0, 8, {0.0, 0.0, 0.0});
  // left half of the window is outside (fill), right half inside
  CHECK(crop.plane[0](4, 0) == doctest::Approx(0.0));
  CHECK(crop.plane[0](4, 7) == doctest::Approx(1.0));
}

TEST_CASE("png round-trip is pixel exact for quantized images") {
  Rng rng(42);
  ImageTensor img = random_quantized_image(rng, 12, 9);
  const auto path = temp_file("vlut_test_roundtrip.png");
  write_png(path.string(), img);
  ImageTensor back = read_png(path.string());
  REQUIRE(back.height == 12);
  REQUIRE(back.width == 9);
  for (int c = 0; c < 3; ++c) CHECK((back.plane[c] - img.plane[c]).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("png read failures name the path") {
  CHECK_THROWS_WITH_AS(read_png("/nonexistent/vlut.png"),
                       doctest::Contains("/nonexistent/vlut.png"), std::runtime_error);
  const auto path = temp_file("vlut_test_corrupt.png");
  {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    REQUIRE(f != nullptr);
    std::fputs("not a png", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_png(path.string()), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("mean color averages planes independently") {
  ImageTensor img(2, 2);
  img.plane[0] << 0.0, 1.0, 1.0, 0.0;
  img.plane[1].setConstant(0.25);
  img.plane[2].setZero();
  auto m = mean_color(img);
  CHECK(m[0] == doctest::Approx(0.5));
  CHECK(m[1] == doctest::Approx(0.25));
  CHECK(m[2] == doctest::Approx(0.0));
}

TEST_SUITE_END();
