#include "sasreg/synthetic.hpp"

#include <cstdio>
#include <random>

#include "sasreg/error.hpp"
#include "sasreg/seeding.hpp"

namespace sasreg::sim {
namespace {

constexpr std::uint64_t kSceneStream = 0x7363656e65;
constexpr std::uint64_t kParamStream = 0x706172616d;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365;

double draw(std::mt19937_64& rng, const Range& r) {
  // Always consume one draw so fixed ranges do not shift later streams.
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return r.lo + (r.hi - r.lo) * u;
}

std::uint64_t frame_seed(const SyntheticSpec& spec, int index) {
  return derive_seed(spec.seed, {static_cast<std::uint64_t>(index)});
}

struct SceneRecipe {
  std::uint64_t seed;
  int vessels;
};

SceneRecipe scene_recipe(const SyntheticSpec& spec, int index) {
  const std::uint64_t base = spec.shared_scene ? derive_seed(spec.seed, {kSceneStream})
                                               : derive_seed(frame_seed(spec, index), {kSceneStream});
  std::mt19937_64 rng(base);
  const int vessels =
      std::uniform_int_distribution<int>(spec.vessels_min, spec.vessels_max)(rng);
  return {base, vessels};
}

}  // namespace

void SyntheticSpec::validate() const {
  if (count < 0) fail(ErrorKind::invalid_argument, "frame count must be >= 0");
  if (width % 2 != 0) fail(ErrorKind::invalid_argument, "frame width must be even");
  if (height < 16 || width < 16) {
    fail(ErrorKind::dimension_too_small, "frames must be at least 16x16");
  }
  if (vessels_min < 1 || vessels_max < vessels_min) {
    fail(ErrorKind::invalid_argument, "vessel count range must satisfy 1 <= min <= max");
  }
  for (const Range* r : {&gain_odd, &gain_even, &offset_odd, &offset_even, &shift_odd, &shift_even}) {
    if (!(r->lo <= r->hi)) fail(ErrorKind::invalid_argument, "parameter range has lo > hi");
  }
  if (!(gain_odd.lo > 0.0) || !(gain_even.lo > 0.0)) {
    fail(ErrorKind::invalid_argument, "gains must be > 0");
  }
  if (blur_sigma < 0.0 || noise_sigma < 0.0) {
    fail(ErrorKind::invalid_argument, "blur and noise sigmas must be >= 0");
  }
}

PhantomScene frame_scene(const SyntheticSpec& spec, int index) {
  const auto recipe = scene_recipe(spec, index);
  return generate_phantom(spec.height, spec.width, recipe.seed, recipe.vessels);
}

data::Frame synthesize_frame(const SyntheticSpec& spec, int index) {
  spec.validate();
  const std::uint64_t seed = frame_seed(spec, index);
  std::mt19937_64 rng(derive_seed(seed, {kParamStream}));
  SimGroundTruth gt;
  gt.scene = frame_scene(spec, index);
  gt.params_odd.gain = draw(rng, spec.gain_odd);
  gt.params_odd.offset = draw(rng, spec.offset_odd);
  gt.params_odd.column_shift = draw(rng, spec.shift_odd);
  gt.params_even.gain = draw(rng, spec.gain_even);
  gt.params_even.offset = draw(rng, spec.offset_even);
  gt.params_even.column_shift = draw(rng, spec.shift_even);
  gt.params_odd.blur_sigma = gt.params_even.blur_sigma = spec.blur_sigma;
  gt.params_odd.noise_sigma = gt.params_even.noise_sigma = spec.noise_sigma;
  gt.seed = derive_seed(seed, {kNoiseStream});
  const SimPair pair = simulate_pair(gt);

  char id[32];
  std::snprintf(id, sizeof id, "%05d", index);
  auto frame = data::Frame::from_interleaved(spec.id_prefix + id, pair.interleaved);
  data::GroundTruthRecord record;
  record.params_odd = gt.params_odd;
  record.params_even = gt.params_even;
  record.seed = gt.seed;
  record.scene_seed = gt.scene.seed;
  record.vessel_count = scene_recipe(spec, index).vessels;
  frame.ground_truth = record;
  return frame;
}

std::vector<data::Frame> synthesize_frames(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<data::Frame> frames;
  frames.reserve(spec.count);
  for (int i = 0; i < spec.count; ++i) frames.push_back(synthesize_frame(spec, i));
  return frames;
}

}  // namespace sasreg::sim
