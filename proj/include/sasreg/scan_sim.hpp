#pragma once

#include <cstdint>

#include "sasreg/image.hpp"

// Synthetic bidirectional raster-scan simulator.
//
// The forward imaging model renders a phantom scene under one scan
// direction's acquisition parameters as
//   shift columns -> Gaussian blur -> gain * x + offset -> additive noise -> clip
// Column convention: the odd-line (forward) domain occupies 0-based even
// column indices of the interleaved frame, the even-line (backward) domain
// occupies 0-based odd indices.
namespace sasreg::sim {

struct PhantomScene {
  Image intensity;  // values in [0,1]
  std::uint64_t seed = 0;
};

struct AcquisitionParams {
  double gain = 1.0;          // > 0
  double offset = 0.0;        // intensity units
  double column_shift = 0.0;  // pixels, sub-pixel allowed
  double blur_sigma = 0.0;    // pixels, >= 0
  double noise_sigma = 0.0;   // intensity units, >= 0

  /// Throws ErrorKind::invalid_argument on gain <= 0 or negative sigmas.
  void validate() const;

  bool operator==(const AcquisitionParams&) const = default;
};

struct SimGroundTruth {
  PhantomScene scene;
  AcquisitionParams params_odd;
  AcquisitionParams params_even;
  std::uint64_t seed = 0;  // drives the per-direction noise streams
};

struct SimPair {
  Image odd;          // full-width rendering under params_odd
  Image even;         // full-width rendering under params_even
  Image interleaved;  // odd in even-indexed columns, even in odd-indexed columns
};

/// Random smooth vessels (cubic-spline centre lines, Gaussian cross-section)
/// on a dark background. Throws dimension-too-small for height or width
/// below 16 and invalid-argument for vessel_count < 1.
PhantomScene generate_phantom(int height, int width, std::uint64_t seed, int vessel_count);

/// Applies the forward imaging model. Deterministic for a fixed noise_seed.
Image render(const PhantomScene& scene, const AcquisitionParams& params,
             std::uint64_t noise_seed);

/// Renders both scan directions of one ground truth and interleaves them.
SimPair simulate_pair(const SimGroundTruth& gt);

/// Noise seeds used by simulate_pair for each direction.
std::uint64_t odd_noise_seed(std::uint64_t gt_seed);
std::uint64_t even_noise_seed(std::uint64_t gt_seed);

/// Analytic re-registration oracle: undoes the even-direction affine
/// response and column shift, then re-applies the odd-direction shift and
/// affine response. Exact (up to round-off) for noise-free, blur-free,
/// unclipped inputs on interior columns.
Image analytic_reregister(const Image& even, const AcquisitionParams& params_even,
                          const AcquisitionParams& params_odd);

/// Shifts every row right by `shift` columns: out(r,c) = in(r, c - shift),
/// linear interpolation, edge replication.
Image shift_columns(const Image& image, double shift);

/// Least-squares inverse of shift_columns (tridiagonal normal equations per
/// row with a tiny Tikhonov term). Columns shifted out of frame are
/// unrecoverable and come back near zero.
Image unshift_columns(const Image& shifted, double shift);

/// Separable Gaussian blur with edge replication; sigma == 0 is a no-op.
Image gaussian_blur(const Image& image, double sigma);

}  // namespace sasreg::sim
