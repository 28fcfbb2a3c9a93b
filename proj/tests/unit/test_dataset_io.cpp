#include <torch/torch.h>
#undef CHECK  // c10 logging macro; doctest's is wanted

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>

#include "helpers.hpp"
#include "sasreg/dataset_io.hpp"
#include "sasreg/error.hpp"
#include "sasreg/png_io.hpp"
#include "sasreg/synthetic.hpp"

using namespace sasreg;
using namespace sasreg::data;

namespace {

ErrorKind error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

std::vector<std::string> make_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("f" + std::to_string(i));
  return ids;
}

void check_partition(const DatasetSplit& s, const std::vector<std::string>& ids) {
  std::vector<std::string> all;
  all.insert(all.end(), s.train_ids.begin(), s.train_ids.end());
  all.insert(all.end(), s.val_ids.begin(), s.val_ids.end());
  all.insert(all.end(), s.test_ids.begin(), s.test_ids.end());
  CHECK(all.size() == ids.size());
  CHECK(std::set<std::string>(all.begin(), all.end()) ==
        std::set<std::string>(ids.begin(), ids.end()));
}

sim::SyntheticSpec small_spec(int count) {
  sim::SyntheticSpec spec;
  spec.count = count;
  spec.height = 32;
  spec.width = 32;
  spec.seed = 5;
  spec.gain_odd = {0.7, 1.3};
  spec.gain_even = {0.7, 1.3};
  spec.offset_odd = {-0.1, 0.1};
  spec.offset_even = {-0.1, 0.1};
  spec.shift_even = {-3.0, 3.0};
  spec.noise_sigma = 0.01;
  return spec;
}

}  // namespace

TEST_CASE("interleave of two-column halves") {
  Image odd(1, 2, std::vector<double>{0.1, 0.3});
  Image even(1, 2, std::vector<double>{0.2, 0.4});
  const Image full = interleave(odd, even);
  CHECK(full == Image(1, 4, std::vector<double>{0.1, 0.2, 0.3, 0.4}));
  const HalfPair back = deinterleave(full);
  CHECK(back.odd == odd);
  CHECK(back.even == even);
}

TEST_CASE("interleave and deinterleave are exact inverses on random images") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const int rows = 1 + static_cast<int>(seed % 13);
    const int cols = 2 * (1 + static_cast<int>((seed * 7) % 11));
    const Image img = testutil::random_image(rows, cols, seed);
    const HalfPair h = deinterleave(img);
    CHECK(interleave(h.odd, h.even) == img);
    const Image o = testutil::random_image(rows, cols / 2, seed + 1000);
    const Image e = testutil::random_image(rows, cols / 2, seed + 2000);
    const HalfPair h2 = deinterleave(interleave(o, e));
    CHECK(h2.odd == o);
    CHECK(h2.even == e);
  }
}

TEST_CASE("interleave shape errors") {
  CHECK(error_kind([] { interleave(Image(2, 3), Image(2, 2)); }) == ErrorKind::shape_mismatch);
  CHECK(error_kind([] { deinterleave(Image(2, 5)); }) == ErrorKind::shape_mismatch);
}

TEST_CASE("augment with everything disabled is the identity") {
  const Frame f = Frame::from_interleaved("x", testutil::random_image(16, 16, 3));
  const Frame out = augment(f, 77, AugmentConfig::disabled());
  CHECK(out.interleaved == f.interleaved);
  CHECK(out.odd_half == f.odd_half);
  CHECK(out.even_half == f.even_half);
}

TEST_CASE("augment scale-only draw multiplies intensities") {
  const Frame f = Frame::from_interleaved("x", testutil::random_image(16, 16, 4, 0.0, 0.5));
  AugmentConfig cfg = AugmentConfig::disabled();
  cfg.scale_min = cfg.scale_max = 1.1;
  const Frame out = augment(f, 1, cfg);
  for (std::size_t i = 0; i < f.interleaved.size(); ++i) {
    CHECK(out.interleaved.pixels()[i] == doctest::Approx(1.1 * f.interleaved.pixels()[i]));
  }
}

TEST_CASE("augment is deterministic, range-preserving and shape-preserving") {
  const Frame f = Frame::from_interleaved("x", testutil::random_image(24, 20, 9));
  const AugmentConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Frame a = augment(f, seed, cfg);
    const Frame b = augment(f, seed, cfg);
    CHECK(a.interleaved == b.interleaved);
    CHECK(a.interleaved.rows() == 24);
    CHECK(a.interleaved.cols() == 20);
    CHECK(a.interleaved.min_value() >= 0.0);
    CHECK(a.interleaved.max_value() <= 1.0);
  }
}

TEST_CASE("augment applies the same geometry to both halves") {
  const Image half = testutil::random_image(20, 10, 31);
  const Frame f = Frame::from_halves("x", half, half);
  AugmentConfig cfg;
  cfg.scale_min = cfg.scale_max = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Frame a = augment(f, seed, cfg);
    CHECK(a.odd_half == a.even_half);
  }
}

TEST_CASE("augment horizontal flip mirrors both halves") {
  const Frame f = Frame::from_interleaved("x", testutil::random_image(4, 8, 12));
  AugmentConfig cfg = AugmentConfig::disabled();
  cfg.hflip_prob = 1.0;
  const Frame a = augment(f, 0, cfg);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      CHECK(a.odd_half(r, c) == f.odd_half(r, 3 - c));
      CHECK(a.even_half(r, c) == f.even_half(r, 3 - c));
    }
  }
}

TEST_CASE("split sizes use floor rounding with the remainder in train") {
  const auto s10 = split_dataset(make_ids(10), {0.8, 0.1, 0.1}, 3);
  CHECK(s10.train_ids.size() == 8);
  CHECK(s10.val_ids.size() == 1);
  CHECK(s10.test_ids.size() == 1);
  const auto s4248 = split_dataset(make_ids(4248), {0.8, 0.1, 0.1}, 3);
  CHECK(s4248.train_ids.size() == 3400);
  CHECK(s4248.val_ids.size() == 424);
  CHECK(s4248.test_ids.size() == 424);
  const auto counts = split_dataset_counts(make_ids(1800), 150, 150, 1);
  CHECK(counts.train_ids.size() == 1500);
  CHECK(counts.val_ids.size() == 150);
}

TEST_CASE("splits are deterministic, disjoint and exhaustive") {
  const auto ids = make_ids(57);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = split_dataset(ids, {0.7, 0.15, 0.15}, seed);
    const auto b = split_dataset(ids, {0.7, 0.15, 0.15}, seed);
    CHECK(a.train_ids == b.train_ids);
    CHECK(a.val_ids == b.val_ids);
    CHECK(a.test_ids == b.test_ids);
    check_partition(a, ids);
  }
  CHECK(split_dataset(ids, {0.8, 0.1, 0.1}, 1).train_ids !=
        split_dataset(ids, {0.8, 0.1, 0.1}, 2).train_ids);
}

TEST_CASE("split preconditions") {
  CHECK(error_kind([] { split_dataset(make_ids(2), {0.8, 0.1, 0.1}, 0); }) ==
        ErrorKind::invalid_argument);
  CHECK(error_kind([] { split_dataset(make_ids(10), {0.8, 0.1, 0.2}, 0); }) ==
        ErrorKind::invalid_argument);
  CHECK(error_kind([] { split_dataset(make_ids(10), {1.1, -0.1, 0.0}, 0); }) ==
        ErrorKind::invalid_argument);
  CHECK(error_kind([] { split_dataset_counts(make_ids(10), 6, 5, 0); }) ==
        ErrorKind::invalid_argument);
}

TEST_CASE("synthetic dataset roundtrip keeps pixels and ground truth") {
  testutil::TempDir dir("ds");
  const auto frames = sim::synthesize_frames(small_spec(5));
  std::vector<std::string> ids;
  for (const auto& f : frames) ids.push_back(f.frame_id);
  const auto split = split_dataset(ids, {0.6, 0.2, 0.2}, 0);
  write_dataset(dir.path(), frames, split, Layout::synthetic);

  const auto loaded = load_dataset(dir.path(), Layout::synthetic);
  REQUIRE(loaded.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(loaded[i].frame_id == frames[i].frame_id);
    CHECK(loaded[i].interleaved == quantize16(frames[i].interleaved));
    REQUIRE(loaded[i].ground_truth.has_value());
    CHECK(*loaded[i].ground_truth == *frames[i].ground_truth);
  }
  const Manifest m = read_manifest(dir.path());
  CHECK(m.height == 32);
  CHECK(m.width == 32);
  CHECK(m.splits.train_ids == split.train_ids);
  CHECK(m.splits.test_ids == split.test_ids);
}

TEST_CASE("synthetic frame carries parameters drawn inside the ranges") {
  const auto spec = small_spec(20);
  for (const auto& f : sim::synthesize_frames(spec)) {
    const auto& gt = *f.ground_truth;
    CHECK(gt.params_odd.gain >= 0.7);
    CHECK(gt.params_odd.gain <= 1.3);
    CHECK(gt.params_even.offset >= -0.1);
    CHECK(gt.params_even.offset <= 0.1);
    CHECK(std::abs(gt.params_even.column_shift) <= 3.0);
    CHECK(gt.params_odd.column_shift == 0.0);
    CHECK(gt.vessel_count >= spec.vessels_min);
    CHECK(gt.vessel_count <= spec.vessels_max);
  }
  CHECK(sim::synthesize_frame(spec, 3).interleaved == sim::synthesize_frame(spec, 3).interleaved);
}

TEST_CASE("empty dataset directory yields no frames") {
  testutil::TempDir dir("empty");
  CHECK(load_dataset(dir.path(), Layout::synthetic).empty());
}

TEST_CASE("loader error kinds are distinct") {
  testutil::TempDir dir("errs");
  CHECK(error_kind([&] { load_dataset(dir / "nope", Layout::synthetic); }) ==
        ErrorKind::missing_directory);

  std::filesystem::create_directories(dir / "odd" / "frames");
  write_png16(dir / "odd" / "frames" / "a.png", Image(16, 17, 0.5));
  CHECK(error_kind([&] { load_dataset(dir / "odd", Layout::synthetic); }) ==
        ErrorKind::malformed_image);

  std::filesystem::create_directories(dir / "mixed" / "frames");
  write_png16(dir / "mixed" / "frames" / "a.png", Image(16, 16, 0.5));
  write_png16(dir / "mixed" / "frames" / "b.png", Image(16, 18, 0.5));
  CHECK(error_kind([&] { load_dataset(dir / "mixed", Layout::synthetic); }) ==
        ErrorKind::inconsistent_dimensions);

  std::filesystem::create_directories(dir / "junk" / "frames");
  {
    std::ofstream f(dir / "junk" / "frames" / "a.png");
    f << "nope";
  }
  CHECK(error_kind([&] { load_dataset(dir / "junk", Layout::synthetic); }) ==
        ErrorKind::malformed_image);
}

TEST_CASE("select_frames follows the requested order") {
  const auto frames = sim::synthesize_frames(small_spec(4));
  const auto picked = select_frames(frames, {frames[2].frame_id, frames[0].frame_id});
  REQUIRE(picked.size() == 2);
  CHECK(picked[0].frame_id == frames[2].frame_id);
  CHECK(picked[1].frame_id == frames[0].frame_id);
  CHECK_THROWS_AS(select_frames(frames, {"missing"}), Error);
}

TEST_CASE("layout names roundtrip") {
  CHECK(parse_layout(to_string(Layout::orpam4k)) == Layout::orpam4k);
  CHECK(parse_layout(to_string(Layout::synthetic)) == Layout::synthetic);
  CHECK_THROWS_AS(parse_layout("tiff"), Error);
}
