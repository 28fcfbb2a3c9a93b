#include "sasreg/scan_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sasreg/error.hpp"
#include "sasreg/seeding.hpp"

namespace sasreg::sim {
namespace {

struct Point {
  double x = 0.0;  // column
  double y = 0.0;  // row
};

Point lerp(Point a, Point b, double t) { return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t}; }

// Uniform Catmull-Rom segment between p1 and p2.
Point catmull_rom(Point p0, Point p1, Point p2, Point p3, double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  auto axis = [&](double a, double b, double c, double d) {
    return 0.5 * (2.0 * b + (-a + c) * t + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2 +
                  (-a + 3.0 * b - 3.0 * c + d) * t3);
  };
  return {axis(p0.x, p1.x, p2.x, p3.x), axis(p0.y, p1.y, p2.y, p3.y)};
}

Point on_perimeter(double u, double width, double height, double margin) {
  const double w = width + 2.0 * margin;
  const double h = height + 2.0 * margin;
  double d = u * 2.0 * (w + h);
  if (d < w) return {d - margin, -margin};
  d -= w;
  if (d < h) return {width + margin, d - margin};
  d -= h;
  if (d < w) return {width + margin - d, height + margin};
  d -= w;
  return {-margin, height + margin - d};
}

void stamp_segment(Image& img, Point a, Point b, double sigma, double amplitude) {
  const double reach = 4.0 * sigma;
  const int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - reach)));
  const int c1 = std::min(img.cols() - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + reach)));
  const int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - reach)));
  const int r1 = std::min(img.rows() - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + reach)));
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      double t = len2 > 0.0 ? ((c - a.x) * dx + (r - a.y) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double px = a.x + t * dx - c;
      const double py = a.y + t * dy - r;
      const double v = amplitude * std::exp(-(px * px + py * py) * inv_two_var);
      img(r, c) = std::max(img(r, c), v);
    }
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

// Interpolation stencil of shift_columns for one output column.
struct Tap {
  int i0 = 0;
  int i1 = 0;
  double w0 = 1.0;
  double w1 = 0.0;
};

Tap shift_tap(int c, double shift, int cols) {
  const double x = c - shift;
  const double x0 = std::floor(x);
  const double f = x - x0;
  Tap tap;
  tap.i0 = std::clamp(static_cast<int>(x0), 0, cols - 1);
  tap.i1 = std::clamp(static_cast<int>(x0) + 1, 0, cols - 1);
  tap.w0 = 1.0 - f;
  tap.w1 = f;
  return tap;
}

bool is_integer(double v) { return std::abs(v - std::round(v)) < 1e-12; }

}  // namespace

void AcquisitionParams::validate() const {
  if (!(gain > 0.0) || !std::isfinite(gain)) {
    fail(ErrorKind::invalid_argument, "gain must be positive, got " + std::to_string(gain));
  }
  if (!std::isfinite(offset) || !std::isfinite(column_shift)) {
    fail(ErrorKind::invalid_argument, "offset and column_shift must be finite");
  }
  if (!(blur_sigma >= 0.0) || !std::isfinite(blur_sigma)) {
    fail(ErrorKind::invalid_argument, "blur_sigma must be non-negative");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    fail(ErrorKind::invalid_argument, "noise_sigma must be non-negative");
  }
}

PhantomScene generate_phantom(int height, int width, std::uint64_t seed, int vessel_count) {
  if (height < 16 || width < 16) {
    fail(ErrorKind::dimension_too_small,
         "phantom must be at least 16x16, got " + std::to_string(height) + "x" +
             std::to_string(width));
  }
  if (vessel_count < 1) {
    fail(ErrorKind::invalid_argument, "vessel_count must be >= 1");
  }

  std::mt19937_64 rng(derive_seed(seed, {0x70686e74ULL}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> radius(1.0, 2.2);
  std::uniform_real_distribution<double> brightness(0.45, 1.0);

  Image img(height, width, 0.0);
  const double min_span = 0.5 * std::min(height, width);

  for (int v = 0; v < vessel_count; ++v) {
    const Point start = on_perimeter(unit(rng), width, height, 2.0);
    Point end = on_perimeter(unit(rng), width, height, 2.0);
    for (int tries = 0; tries < 16; ++tries) {
      if (std::hypot(end.x - start.x, end.y - start.y) >= min_span) break;
      end = on_perimeter(unit(rng), width, height, 2.0);
    }
    // Two interior knots displaced perpendicular to the chord give the bend.
    const double len = std::hypot(end.x - start.x, end.y - start.y);
    const Point normal = len > 0 ? Point{-(end.y - start.y) / len, (end.x - start.x) / len}
                                 : Point{1.0, 0.0};
    std::array<Point, 4> knots{start, lerp(start, end, 1.0 / 3.0), lerp(start, end, 2.0 / 3.0),
                               end};
    for (int k = 1; k <= 2; ++k) {
      const double bend = (unit(rng) - 0.5) * 0.5 * len;
      knots[k].x += normal.x * bend;
      knots[k].y += normal.y * bend;
    }
    const Point before{2.0 * knots[0].x - knots[1].x, 2.0 * knots[0].y - knots[1].y};
    const Point after{2.0 * knots[3].x - knots[2].x, 2.0 * knots[3].y - knots[2].y};
    const std::array<Point, 6> ctrl{before, knots[0], knots[1], knots[2], knots[3], after};

    const double sigma = radius(rng);
    const double amplitude = brightness(rng);
    const int samples_per_span = std::max(8, static_cast<int>(len));
    Point prev = ctrl[1];
    for (int span = 0; span < 3; ++span) {
      for (int s = 1; s <= samples_per_span; ++s) {
        const double t = static_cast<double>(s) / samples_per_span;
        const Point p = catmull_rom(ctrl[span], ctrl[span + 1], ctrl[span + 2], ctrl[span + 3], t);
        stamp_segment(img, prev, p, sigma, amplitude);
        prev = p;
      }
    }
  }
  clip(img);
  return PhantomScene{std::move(img), seed};
}

Image shift_columns(const Image& image, double shift) {
  Image out(image.rows(), image.cols());
  for (int c = 0; c < image.cols(); ++c) {
    const Tap tap = shift_tap(c, shift, image.cols());
    for (int r = 0; r < image.rows(); ++r) {
      out(r, c) = tap.w1 == 0.0 ? image(r, tap.i0)
                                : tap.w0 * image(r, tap.i0) + tap.w1 * image(r, tap.i1);
    }
  }
  return out;
}

Image unshift_columns(const Image& shifted, double shift) {
  const int cols = shifted.cols();
  if (is_integer(shift)) return shift_columns(shifted, -std::round(shift));

  constexpr double kTikhonov = 1e-10;
  constexpr double kSmoothness = 1e-3;
  std::vector<Tap> taps(static_cast<std::size_t>(cols));
  for (int c = 0; c < cols; ++c) taps[c] = shift_tap(c, shift, cols);

  // Normal equations (B^T B + s D^T D + aI) x = B^T y, D the first
  // difference, are tridiagonal because every row of B touches at most two
  // adjacent unknowns. The difference penalty damps the alternating mode that
  // linear interpolation attenuates near half-pixel shifts.
  std::vector<double> diag(static_cast<std::size_t>(cols));
  std::vector<double> off(static_cast<std::size_t>(cols), 0.0);  // off[i] couples i, i+1
  std::fill(diag.begin(), diag.end(), kTikhonov);
  for (int i = 0; i + 1 < cols; ++i) {
    diag[i] += kSmoothness;
    diag[i + 1] += kSmoothness;
    off[i] -= kSmoothness;
  }
  for (const Tap& t : taps) {
    if (t.i0 == t.i1) {
      diag[t.i0] += (t.w0 + t.w1) * (t.w0 + t.w1);
    } else {
      diag[t.i0] += t.w0 * t.w0;
      diag[t.i1] += t.w1 * t.w1;
      off[std::min(t.i0, t.i1)] += t.w0 * t.w1;
    }
  }

  Image out(shifted.rows(), cols);
  std::vector<double> rhs(static_cast<std::size_t>(cols));
  std::vector<double> cprime(static_cast<std::size_t>(cols));
  std::vector<double> dprime(static_cast<std::size_t>(cols));
  for (int r = 0; r < shifted.rows(); ++r) {
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (int c = 0; c < cols; ++c) {
      const Tap& t = taps[c];
      const double y = shifted(r, c);
      if (t.i0 == t.i1) {
        rhs[t.i0] += (t.w0 + t.w1) * y;
      } else {
        rhs[t.i0] += t.w0 * y;
        rhs[t.i1] += t.w1 * y;
      }
    }
    // Thomas algorithm.
    cprime[0] = off[0] / diag[0];
    dprime[0] = rhs[0] / diag[0];
    for (int i = 1; i < cols; ++i) {
      const double denom = diag[i] - off[i - 1] * cprime[i - 1];
      cprime[i] = i + 1 < cols ? off[i] / denom : 0.0;
      dprime[i] = (rhs[i] - off[i - 1] * dprime[i - 1]) / denom;
    }
    out(r, cols - 1) = dprime[cols - 1];
    for (int i = cols - 2; i >= 0; --i) out(r, i) = dprime[i] - cprime[i] * out(r, i + 1);
  }
  return out;
}

Image gaussian_blur(const Image& image, double sigma) {
  if (sigma <= 0.0) return image;
  const std::vector<double> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  Image tmp(image.rows(), image.cols());
  for (int r = 0; r < image.rows(); ++r) {
    for (int c = 0; c < image.cols(); ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * image.clamped(r, c + i);
      tmp(r, c) = acc;
    }
  }
  Image out(image.rows(), image.cols());
  for (int r = 0; r < image.rows(); ++r) {
    for (int c = 0; c < image.cols(); ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp.clamped(r + i, c);
      out(r, c) = acc;
    }
  }
  return out;
}

Image render(const PhantomScene& scene, const AcquisitionParams& params,
             std::uint64_t noise_seed) {
  params.validate();
  Image out = params.column_shift == 0.0 ? scene.intensity
                                         : shift_columns(scene.intensity, params.column_shift);
  out = gaussian_blur(out, params.blur_sigma);
  for (double& v : out.pixels()) v = params.gain * v + params.offset;
  if (params.noise_sigma > 0.0) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> noise(0.0, params.noise_sigma);
    for (double& v : out.pixels()) v += noise(rng);
  }
  clip(out);
  return out;
}

std::uint64_t odd_noise_seed(std::uint64_t gt_seed) { return derive_seed(gt_seed, {1}); }
std::uint64_t even_noise_seed(std::uint64_t gt_seed) { return derive_seed(gt_seed, {2}); }

SimPair simulate_pair(const SimGroundTruth& gt) {
  SimPair pair;
  pair.odd = render(gt.scene, gt.params_odd, odd_noise_seed(gt.seed));
  pair.even = render(gt.scene, gt.params_even, even_noise_seed(gt.seed));
  pair.interleaved = Image(pair.odd.rows(), pair.odd.cols());
  for (int r = 0; r < pair.odd.rows(); ++r) {
    for (int c = 0; c < pair.odd.cols(); ++c) {
      pair.interleaved(r, c) = (c % 2 == 0) ? pair.odd(r, c) : pair.even(r, c);
    }
  }
  return pair;
}

Image analytic_reregister(const Image& even, const AcquisitionParams& params_even,
                          const AcquisitionParams& params_odd) {
  params_even.validate();
  params_odd.validate();
  Image latent = even;
  for (double& v : latent.pixels()) v = (v - params_even.offset) / params_even.gain;

  const double net = params_odd.column_shift - params_even.column_shift;
  if (net != 0.0) {
    if (is_integer(net)) {
      latent = shift_columns(latent, std::round(net));
    } else {
      latent = unshift_columns(latent, params_even.column_shift);
      if (params_odd.column_shift != 0.0) latent = shift_columns(latent, params_odd.column_shift);
    }
  }
  for (double& v : latent.pixels()) v = params_odd.gain * v + params_odd.offset;
  clip(latent);
  return latent;
}

}  // namespace sasreg::sim
