#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <vector>

#include <png.h>

#include "helpers.hpp"
#include "sasreg/error.hpp"
#include "sasreg/png_io.hpp"

using namespace sasreg;

namespace {

void write_gray8(const std::filesystem::path& path, int rows, int cols,
                 const std::vector<std::uint8_t>& px) {
  FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, cols, rows, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < rows; ++r) {
    png_write_row(png, const_cast<png_bytep>(px.data() + static_cast<std::size_t>(r) * cols));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

}  // namespace

TEST_CASE("image accessors and edge clamping") {
  Image img(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(img(1, 2) == 6);
  CHECK(img.clamped(-5, -5) == 1);
  CHECK(img.clamped(9, 9) == 6);
  CHECK(img.clamped(0, 7) == 3);
  CHECK(img.min_value() == 1);
  CHECK(img.max_value() == 6);
  CHECK(img.mean() == doctest::Approx(3.5));
  Image other = img;
  other(0, 0) = 1.25;
  CHECK(max_abs_diff(img, other) == doctest::Approx(0.25));
  clip(other, 0.0, 2.0);
  CHECK(other.max_value() == 2.0);
}

TEST_CASE("16-bit PNG roundtrip is exact on the 16-bit grid") {
  testutil::TempDir dir("png16");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image img = quantize16(testutil::random_image(17, 10, seed));
    write_png16(dir / "a.png", img);
    const Image back = read_png(dir / "a.png");
    CHECK(back == img);
  }
}

TEST_CASE("16-bit PNG stores round(v * 65535) after clipping") {
  testutil::TempDir dir("pngq");
  Image img(1, 4, std::vector<double>{-0.5, 0.0, 0.5, 1.5});
  write_png16(dir / "q.png", img);
  const Image back = read_png(dir / "q.png");
  CHECK(back(0, 0) == 0.0);
  CHECK(back(0, 1) == 0.0);
  CHECK(back(0, 2) == doctest::Approx(32768.0 / 65535.0).epsilon(1e-12));
  CHECK(back(0, 3) == 1.0);
}

TEST_CASE("8-bit grayscale PNG reads as v/255") {
  testutil::TempDir dir("png8");
  write_gray8(dir / "g.png", 2, 2, {0, 51, 204, 255});
  const Image img = read_png(dir / "g.png");
  REQUIRE(img.rows() == 2);
  REQUIRE(img.cols() == 2);
  CHECK(img(0, 1) == doctest::Approx(0.2));
  CHECK(img(1, 0) == doctest::Approx(0.8));
  CHECK(img(1, 1) == 1.0);
}

TEST_CASE("RGB PNG roundtrip") {
  testutil::TempDir dir("rgb");
  RgbImage img(3, 5, 0);
  img.set(1, 2, 10, 20, 30);
  img.set(2, 4, 255, 0, 128);
  write_png_rgb(dir / "c.png", img);
  const RgbImage back = read_png_rgb(dir / "c.png");
  CHECK(back.rows == 3);
  CHECK(back.cols == 5);
  CHECK(back.rgb == img.rgb);
}

TEST_CASE("corrupt or colour PNG inputs are malformed-image errors") {
  testutil::TempDir dir("bad");
  {
    std::ofstream f(dir / "junk.png", std::ios::binary);
    f << "definitely not a png";
  }
  try {
    read_png(dir / "junk.png");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::malformed_image);
  }
  RgbImage rgb(2, 2, 7);
  write_png_rgb(dir / "rgb.png", rgb);
  try {
    read_png(dir / "rgb.png");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::malformed_image);
  }
}
