#include "sasreg/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>

#include "sasreg/error.hpp"

namespace sasreg {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode, ErrorKind kind) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) fail(kind, "cannot open " + path.string());
  return f;
}

// libpng reports errors through longjmp; route them into exceptions at the
// call boundary by checking setjmp in each entry point.
void write_rows(const std::filesystem::path& path, int rows, int cols, int color_type,
                int bit_depth, const std::vector<png_bytep>& row_ptrs) {
  FilePtr f = open_file(path, "wb", ErrorKind::io);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorKind::io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "failed writing " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(row_ptrs.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct Decoded {
  int rows = 0;
  int cols = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;
};

Decoded decode(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb", ErrorKind::malformed_image);
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    fail(ErrorKind::malformed_image, path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorKind::io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  Decoded out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::malformed_image, "corrupt PNG stream in " + path.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_swap(png);  // host little-endian words
  png_read_update_info(png, info);
  out.rows = static_cast<int>(png_get_image_height(png, info));
  out.cols = static_cast<int>(png_get_image_width(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * static_cast<std::size_t>(out.rows));
  std::vector<png_bytep> rows(static_cast<std::size_t>(out.rows));
  for (int r = 0; r < out.rows; ++r) rows[r] = out.bytes.data() + stride * r;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

std::uint16_t to_u16(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

}  // namespace

void RgbImage::set(int r, int c, std::uint8_t red, std::uint8_t green, std::uint8_t blue) {
  if (r < 0 || c < 0 || r >= rows || c >= cols) return;
  const std::size_t i = (static_cast<std::size_t>(r) * cols + c) * 3;
  rgb[i] = red;
  rgb[i + 1] = green;
  rgb[i + 2] = blue;
}

void write_png16(const std::filesystem::path& path, const Image& image) {
  if (image.empty()) fail(ErrorKind::invalid_argument, "refusing to write an empty image");
  std::vector<std::uint16_t> words(image.size());
  auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const std::uint16_t v = to_u16(px[i]);
    // PNG stores 16-bit samples big-endian.
    words[i] = static_cast<std::uint16_t>((v >> 8) | (v << 8));
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.rows()));
  for (int r = 0; r < image.rows(); ++r) {
    rows[r] = reinterpret_cast<png_bytep>(words.data() + static_cast<std::size_t>(r) * image.cols());
  }
  write_rows(path, image.rows(), image.cols(), PNG_COLOR_TYPE_GRAY, 16, rows);
}

Image read_png(const std::filesystem::path& path) {
  Decoded d = decode(path);
  if (d.channels != 1) {
    fail(ErrorKind::malformed_image,
         path.string() + ": expected grayscale, found " + std::to_string(d.channels) + " channels");
  }
  Image out(d.rows, d.cols);
  auto px = out.pixels();
  if (d.bit_depth == 16) {
    const auto* words = reinterpret_cast<const std::uint16_t*>(d.bytes.data());
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = words[i] / 65535.0;
  } else {
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = d.bytes[i] / 255.0;
  }
  return out;
}

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image) {
  if (image.rows <= 0 || image.cols <= 0) fail(ErrorKind::invalid_argument, "empty RGB image");
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.rows));
  for (int r = 0; r < image.rows; ++r) {
    rows[r] = const_cast<png_bytep>(image.rgb.data() + static_cast<std::size_t>(r) * image.cols * 3);
  }
  write_rows(path, image.rows, image.cols, PNG_COLOR_TYPE_RGB, 8, rows);
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  Decoded d = decode(path);
  if (d.channels != 3 || d.bit_depth != 8) {
    fail(ErrorKind::malformed_image, path.string() + ": expected 8-bit RGB");
  }
  RgbImage out;
  out.rows = d.rows;
  out.cols = d.cols;
  out.rgb = std::move(d.bytes);
  return out;
}

Image quantize16(const Image& image) {
  Image out = image;
  for (double& v : out.pixels()) v = to_u16(v) / 65535.0;
  return out;
}

}  // namespace sasreg
