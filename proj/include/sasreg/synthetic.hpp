#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sasreg/dataset_io.hpp"
#include "sasreg/scan_sim.hpp"

// Batches of simulated bidirectional frames with per-frame random phantoms
// and acquisition parameters.
namespace sasreg::sim {

/// Closed interval; lo == hi means a fixed value.
struct Range {
  double lo = 0.0;
  double hi = 0.0;

  static Range fixed(double v) { return {v, v}; }
  bool operator==(const Range&) const = default;
};

struct SyntheticSpec {
  int count = 1;
  int height = 128;
  int width = 64;  // interleaved width; must be even
  std::uint64_t seed = 0;
  int vessels_min = 6;
  int vessels_max = 12;
  Range gain_odd = Range::fixed(1.0);
  Range gain_even = Range::fixed(1.0);
  Range offset_odd = Range::fixed(0.0);
  Range offset_even = Range::fixed(0.0);
  Range shift_odd = Range::fixed(0.0);
  Range shift_even = Range::fixed(0.0);
  double blur_sigma = 0.0;
  double noise_sigma = 0.0;
  std::string id_prefix = "frame_";
  // Reuse one phantom for every frame (sequence mode).
  bool shared_scene = false;

  /// Throws ErrorKind::invalid_argument on inverted ranges, non-positive
  /// gains, negative sigmas, bad counts or an odd width.
  void validate() const;
};

/// Frame i is a pure function of (spec, i): its seed is derive_seed(spec.seed, {i}).
data::Frame synthesize_frame(const SyntheticSpec& spec, int index);

std::vector<data::Frame> synthesize_frames(const SyntheticSpec& spec);

/// Phantom used by frame `index` (or by every frame with shared_scene).
PhantomScene frame_scene(const SyntheticSpec& spec, int index);

}  // namespace sasreg::sim
