#include "sasreg/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sasreg/error.hpp"

namespace sasreg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::dimension_too_small: return "dimension-too-small";
    case ErrorKind::shape_mismatch: return "shape-mismatch";
    case ErrorKind::missing_directory: return "missing-directory";
    case ErrorKind::malformed_image: return "malformed-image";
    case ErrorKind::inconsistent_dimensions: return "inconsistent-dimensions";
    case ErrorKind::io: return "io";
    case ErrorKind::checkpoint: return "checkpoint";
    case ErrorKind::schema_mismatch: return "schema-mismatch";
    case ErrorKind::training_diverged: return "training-diverged";
    case ErrorKind::malformed_report: return "malformed-report";
    case ErrorKind::empty_dataset: return "empty-dataset";
  }
  return "unknown";
}

Image::Image(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) {
    fail(ErrorKind::invalid_argument, "negative image dimensions");
  }
  pixels_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
}

Image::Image(int rows, int cols, std::vector<double> pixels)
    : rows_(rows), cols_(cols), pixels_(std::move(pixels)) {
  if (rows < 0 || cols < 0 ||
      pixels_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    fail(ErrorKind::shape_mismatch,
         "pixel buffer of size " + std::to_string(pixels_.size()) + " does not match " +
             std::to_string(rows) + "x" + std::to_string(cols));
  }
}

double Image::clamped(int r, int c) const {
  r = std::clamp(r, 0, rows_ - 1);
  c = std::clamp(c, 0, cols_ - 1);
  return pixels_[index(r, c)];
}

double Image::min_value() const {
  return pixels_.empty() ? 0.0 : *std::min_element(pixels_.begin(), pixels_.end());
}

double Image::max_value() const {
  return pixels_.empty() ? 0.0 : *std::max_element(pixels_.begin(), pixels_.end());
}

double Image::mean() const {
  if (pixels_.empty()) return 0.0;
  return std::accumulate(pixels_.begin(), pixels_.end(), 0.0) /
         static_cast<double>(pixels_.size());
}

void clip(Image& image, double lo, double hi) {
  for (double& v : image.pixels()) v = std::clamp(v, lo, hi);
}

double max_abs_diff(const Image& a, const Image& b) {
  if (!a.same_shape(b)) fail(ErrorKind::shape_mismatch, "max_abs_diff: shape mismatch");
  double worst = 0.0;
  auto pa = a.pixels();
  auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) worst = std::max(worst, std::abs(pa[i] - pb[i]));
  return worst;
}

}  // namespace sasreg
