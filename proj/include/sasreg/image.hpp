#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sasreg {

/// Single-channel row-major raster in double precision.
///
/// Value semantics; intensities are nominally in [0,1] but the type itself
/// does not enforce a range (intermediate results may leave it).
class Image {
 public:
  Image() = default;
  Image(int rows, int cols, double fill = 0.0);
  Image(int rows, int cols, std::vector<double> pixels);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  double& operator()(int r, int c) { return pixels_[index(r, c)]; }
  double operator()(int r, int c) const { return pixels_[index(r, c)]; }

  /// Edge-replicated access; out-of-range coordinates clamp to the border.
  double clamped(int r, int c) const;

  std::span<double> pixels() noexcept { return pixels_; }
  std::span<const double> pixels() const noexcept { return pixels_; }

  double min_value() const;
  double max_value() const;
  double mean() const;

  bool same_shape(const Image& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int r, int c) const noexcept {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> pixels_;
};

/// Clamps every pixel into [lo, hi] in place.
void clip(Image& image, double lo = 0.0, double hi = 1.0);

/// Largest absolute pixel difference; shapes must match.
double max_abs_diff(const Image& a, const Image& b);

}  // namespace sasreg
