#include "sasreg/figures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "sasreg/error.hpp"

namespace sasreg::fig {
namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr std::array<Rgb, 6> kPalette = {{
    {{128, 128, 128}},  // baseline gray
    {{31, 119, 180}},
    {{255, 127, 14}},
    {{44, 160, 44}},
    {{214, 39, 40}},
    {{148, 103, 189}},
}};

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void fill_rect(RgbImage& img, int r0, int c0, int r1, int c1, Rgb color) {
  r0 = std::max(r0, 0);
  c0 = std::max(c0, 0);
  r1 = std::min(r1, img.rows - 1);
  c1 = std::min(c1, img.cols - 1);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) img.set(r, c, color[0], color[1], color[2]);
  }
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - t) + sorted[hi] * t;
}

}  // namespace

RgbImage overlay(const Image& odd_half, const Image& even_half, int column_scale) {
  if (!odd_half.same_shape(even_half)) fail(ErrorKind::shape_mismatch, "overlay: shapes differ");
  if (column_scale < 1) fail(ErrorKind::invalid_argument, "overlay: column_scale < 1");
  RgbImage out(odd_half.rows(), odd_half.cols() * column_scale, 0);
  for (int r = 0; r < odd_half.rows(); ++r) {
    for (int c = 0; c < odd_half.cols(); ++c) {
      const auto m = to_byte(odd_half(r, c));
      const auto g = to_byte(even_half(r, c));
      for (int k = 0; k < column_scale; ++k) out.set(r, c * column_scale + k, m, g, m);
    }
  }
  return out;
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) fail(ErrorKind::invalid_argument, "box_stats: no values");
  std::sort(values.begin(), values.end());
  BoxStats s;
  s.q1 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q3 = quantile(values, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.min = s.q1;
  s.max = s.q3;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      s.outliers.push_back(v);
    } else {
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
  }
  return s;
}

RgbImage box_plot(const std::vector<BoxSeries>& series, int width, int height) {
  if (series.empty()) fail(ErrorKind::invalid_argument, "box_plot: no series");
  if (width < 64 || height < 64) fail(ErrorKind::invalid_argument, "box_plot: canvas too small");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::vector<BoxStats> stats;
  for (const auto& s : series) {
    std::vector<double> finite;
    for (double v : s.values) {
      if (std::isfinite(v)) finite.push_back(v);
    }
    if (finite.empty()) fail(ErrorKind::invalid_argument, "box_plot: series '" + s.name + "' is empty");
    stats.push_back(box_stats(finite));
    lo = std::min(lo, *std::min_element(finite.begin(), finite.end()));
    hi = std::max(hi, *std::max_element(finite.begin(), finite.end()));
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  RgbImage img(height, width, 255);
  const int left = 24;
  const int right = width - 8;
  const int top = 8;
  const int bottom = height - 16;
  auto y_of = [&](double v) {
    return bottom - static_cast<int>(std::lround((v - lo) / (hi - lo) * (bottom - top)));
  };
  const Rgb grid = {{225, 225, 225}};
  const Rgb axis = {{0, 0, 0}};
  for (int i = 0; i <= 10; ++i) {
    const int y = bottom - (bottom - top) * i / 10;
    fill_rect(img, y, left, y, right, grid);
  }
  fill_rect(img, top, left, bottom, left, axis);
  fill_rect(img, bottom, left, bottom, right, axis);

  const int slot = (right - left) / static_cast<int>(series.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    const Rgb color = kPalette[i % kPalette.size()];
    const int cx = left + slot * static_cast<int>(i) + slot / 2;
    const int half = std::max(3, slot / 4);
    fill_rect(img, y_of(s.max), cx, y_of(s.min), cx, axis);
    fill_rect(img, y_of(s.max), cx - half / 2, y_of(s.max), cx + half / 2, axis);
    fill_rect(img, y_of(s.min), cx - half / 2, y_of(s.min), cx + half / 2, axis);
    fill_rect(img, y_of(s.q3), cx - half, y_of(s.q1), cx + half, color);
    const int ym = y_of(s.median);
    fill_rect(img, ym - 1, cx - half, ym + 1, cx + half, axis);
    for (double v : s.outliers) {
      const int y = y_of(v);
      fill_rect(img, y - 1, cx - 1, y + 1, cx + 1, color);
    }
    // Legend swatch under the axis, in series order.
    fill_rect(img, bottom + 4, cx - half, bottom + 12, cx + half, color);
  }
  return img;
}

}  // namespace sasreg::fig
