#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sasreg/image.hpp"

namespace sasreg {

/// Writes a 16-bit grayscale PNG. Values are clipped to [0,1] and stored as
/// round(v * 65535).
void write_png16(const std::filesystem::path& path, const Image& image);

/// Reads an 8- or 16-bit grayscale PNG into [0,1] (v/255 or v/65535).
/// Anything else (palette, colour, alpha, corrupt stream) is a
/// malformed-image error.
Image read_png(const std::filesystem::path& path);

/// 8-bit interleaved RGB raster used for figures.
struct RgbImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> rgb;  // rows * cols * 3

  RgbImage() = default;
  RgbImage(int r, int c, std::uint8_t fill = 255)
      : rows(r), cols(c), rgb(static_cast<std::size_t>(r) * c * 3, fill) {}

  void set(int r, int c, std::uint8_t red, std::uint8_t green, std::uint8_t blue);
};

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png_rgb(const std::filesystem::path& path);

/// Quantizes to the 16-bit grid used on disk (what a write/read cycle yields).
Image quantize16(const Image& image);

}  // namespace sasreg
