#include "sasreg/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "sasreg/error.hpp"
#include "sasreg/png_io.hpp"

namespace sasreg::data {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::schema_mismatch, path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

Image flip_horizontal(const Image& in) {
  Image out(in.rows(), in.cols());
  for (int r = 0; r < in.rows(); ++r)
    for (int c = 0; c < in.cols(); ++c) out(r, c) = in(r, in.cols() - 1 - c);
  return out;
}

Image flip_vertical(const Image& in) {
  Image out(in.rows(), in.cols());
  for (int r = 0; r < in.rows(); ++r)
    for (int c = 0; c < in.cols(); ++c) out(r, c) = in(in.rows() - 1 - r, c);
  return out;
}

double bilinear_clamped(const Image& in, double r, double c) {
  r = std::clamp(r, 0.0, static_cast<double>(in.rows() - 1));
  c = std::clamp(c, 0.0, static_cast<double>(in.cols() - 1));
  const int r0 = static_cast<int>(std::floor(r));
  const int c0 = static_cast<int>(std::floor(c));
  const double fr = r - r0;
  const double fc = c - c0;
  const double top = (1.0 - fc) * in.clamped(r0, c0) + fc * in.clamped(r0, c0 + 1);
  const double bottom = (1.0 - fc) * in.clamped(r0 + 1, c0) + fc * in.clamped(r0 + 1, c0 + 1);
  return (1.0 - fr) * top + fr * bottom;
}

// Rotates a half image about its centre. Half-image columns are two
// full-resolution pixels apart, so the rotation is carried out in physical
// (full-resolution) coordinates to keep it rigid.
Image rotate_half(const Image& in, double degrees) {
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double cr = 0.5 * (in.rows() - 1);
  const double cc = 0.5 * (in.cols() - 1);
  Image out(in.rows(), in.cols());
  for (int r = 0; r < in.rows(); ++r) {
    for (int c = 0; c < in.cols(); ++c) {
      const double y = r - cr;
      const double x = 2.0 * (c - cc);
      const double xs = cos_t * x + sin_t * y;
      const double ys = -sin_t * x + cos_t * y;
      out(r, c) = bilinear_clamped(in, ys + cr, 0.5 * xs + cc);
    }
  }
  return out;
}

void check_unit_range(const Image& img, const std::string& what) {
  if (img.empty()) return;
  if (img.min_value() < 0.0 || img.max_value() > 1.0) {
    fail(ErrorKind::invalid_argument, what + " has values outside [0,1]");
  }
}

}  // namespace

std::string_view to_string(Layout layout) {
  return layout == Layout::synthetic ? "synthetic" : "orpam4k";
}

Layout parse_layout(std::string_view text) {
  if (text == "synthetic") return Layout::synthetic;
  if (text == "orpam4k") return Layout::orpam4k;
  fail(ErrorKind::invalid_argument, "unknown layout '" + std::string(text) + "'");
}

HalfPair deinterleave(const Image& interleaved) {
  if (interleaved.cols() % 2 != 0) {
    fail(ErrorKind::shape_mismatch,
         "deinterleave needs an even width, got " + std::to_string(interleaved.cols()));
  }
  const int half = interleaved.cols() / 2;
  HalfPair out{Image(interleaved.rows(), half), Image(interleaved.rows(), half)};
  for (int r = 0; r < interleaved.rows(); ++r) {
    for (int k = 0; k < half; ++k) {
      out.odd(r, k) = interleaved(r, 2 * k);
      out.even(r, k) = interleaved(r, 2 * k + 1);
    }
  }
  return out;
}

Image interleave(const Image& odd_half, const Image& even_half) {
  if (!odd_half.same_shape(even_half)) {
    fail(ErrorKind::shape_mismatch,
         "interleave needs equal half shapes, got " + std::to_string(odd_half.rows()) + "x" +
             std::to_string(odd_half.cols()) + " and " + std::to_string(even_half.rows()) + "x" +
             std::to_string(even_half.cols()));
  }
  Image out(odd_half.rows(), 2 * odd_half.cols());
  for (int r = 0; r < odd_half.rows(); ++r) {
    for (int k = 0; k < odd_half.cols(); ++k) {
      out(r, 2 * k) = odd_half(r, k);
      out(r, 2 * k + 1) = even_half(r, k);
    }
  }
  return out;
}

json to_json(const GroundTruthRecord& gt) {
  json j{{"gain_odd", gt.params_odd.gain},
         {"offset_odd", gt.params_odd.offset},
         {"shift_odd", gt.params_odd.column_shift},
         {"gain_even", gt.params_even.gain},
         {"offset_even", gt.params_even.offset},
         {"shift_even", gt.params_even.column_shift},
         {"blur_sigma", gt.params_odd.blur_sigma},
         {"noise_sigma", gt.params_odd.noise_sigma},
         {"seed", gt.seed},
         {"scene_seed", gt.scene_seed},
         {"vessel_count", gt.vessel_count}};
  if (gt.params_even.blur_sigma != gt.params_odd.blur_sigma) {
    j["blur_sigma_even"] = gt.params_even.blur_sigma;
  }
  if (gt.params_even.noise_sigma != gt.params_odd.noise_sigma) {
    j["noise_sigma_even"] = gt.params_even.noise_sigma;
  }
  return j;
}

GroundTruthRecord ground_truth_from_json(const json& j) {
  try {
    GroundTruthRecord gt;
    gt.params_odd.gain = j.at("gain_odd").get<double>();
    gt.params_odd.offset = j.at("offset_odd").get<double>();
    gt.params_odd.column_shift = j.at("shift_odd").get<double>();
    gt.params_even.gain = j.at("gain_even").get<double>();
    gt.params_even.offset = j.at("offset_even").get<double>();
    gt.params_even.column_shift = j.at("shift_even").get<double>();
    gt.params_odd.blur_sigma = j.at("blur_sigma").get<double>();
    gt.params_odd.noise_sigma = j.at("noise_sigma").get<double>();
    gt.params_even.blur_sigma = j.value("blur_sigma_even", gt.params_odd.blur_sigma);
    gt.params_even.noise_sigma = j.value("noise_sigma_even", gt.params_odd.noise_sigma);
    gt.seed = j.at("seed").get<std::uint64_t>();
    gt.scene_seed = j.value("scene_seed", gt.seed);
    gt.vessel_count = j.value("vessel_count", 0);
    return gt;
  } catch (const json::exception& e) {
    fail(ErrorKind::schema_mismatch, std::string("ground-truth sidecar: ") + e.what());
  }
}

Frame Frame::from_interleaved(std::string id, Image interleaved, FrameSource source) {
  check_unit_range(interleaved, "frame " + id);
  HalfPair halves = deinterleave(interleaved);
  Frame f;
  f.frame_id = std::move(id);
  f.source = source;
  f.interleaved = std::move(interleaved);
  f.odd_half = std::move(halves.odd);
  f.even_half = std::move(halves.even);
  return f;
}

Frame Frame::from_halves(std::string id, Image odd_half, Image even_half, FrameSource source) {
  Image merged = interleave(odd_half, even_half);
  check_unit_range(merged, "frame " + id);
  Frame f;
  f.frame_id = std::move(id);
  f.source = source;
  f.interleaved = std::move(merged);
  f.odd_half = std::move(odd_half);
  f.even_half = std::move(even_half);
  return f;
}

Frame augment(const Frame& frame, std::uint64_t seed, const AugmentConfig& config) {
  std::mt19937_64 rng(seed);
  // Every draw is taken unconditionally so that disabling one transform does
  // not perturb the others.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool hflip = unit(rng) < config.hflip_prob;
  const bool vflip = unit(rng) < config.vflip_prob;
  const double angle = (2.0 * unit(rng) - 1.0) * config.max_rotation_deg;
  const double scale = config.scale_min + (config.scale_max - config.scale_min) * unit(rng);

  auto apply = [&](const Image& half) {
    Image img = half;
    if (hflip) img = flip_horizontal(img);
    if (vflip) img = flip_vertical(img);
    if (angle != 0.0) img = rotate_half(img, angle);
    if (scale != 1.0) {
      for (double& v : img.pixels()) v *= scale;
    }
    clip(img);
    return img;
  };

  Frame out = Frame::from_halves(frame.frame_id, apply(frame.odd_half), apply(frame.even_half),
                                 frame.source);
  out.ground_truth = frame.ground_truth;
  return out;
}

DatasetSplit split_dataset(std::vector<std::string> frame_ids, const SplitRatios& ratios,
                           std::uint64_t seed) {
  if (frame_ids.size() < 3) {
    fail(ErrorKind::invalid_argument, "split_dataset needs at least 3 frames");
  }
  if (ratios.train < 0.0 || ratios.val < 0.0 || ratios.test < 0.0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    fail(ErrorKind::invalid_argument, "split ratios must be non-negative and sum to 1");
  }
  const auto n = static_cast<double>(frame_ids.size());
  const auto n_val = static_cast<std::size_t>(std::floor(n * ratios.val + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
  return split_dataset_counts(std::move(frame_ids), n_val, n_test, seed);
}

DatasetSplit split_dataset_counts(std::vector<std::string> frame_ids, std::size_t val_count,
                                  std::size_t test_count, std::uint64_t seed) {
  if (val_count + test_count > frame_ids.size()) {
    fail(ErrorKind::invalid_argument, "split: val + test counts exceed the number of frames");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(frame_ids.begin(), frame_ids.end(), rng);
  DatasetSplit split;
  auto it = frame_ids.begin();
  split.val_ids.assign(it, it + static_cast<std::ptrdiff_t>(val_count));
  it += static_cast<std::ptrdiff_t>(val_count);
  split.test_ids.assign(it, it + static_cast<std::ptrdiff_t>(test_count));
  it += static_cast<std::ptrdiff_t>(test_count);
  split.train_ids.assign(it, frame_ids.end());
  return split;
}

json to_json(const Manifest& m) {
  return json{{"schema_version", m.schema_version},
              {"layout", std::string(to_string(m.layout))},
              {"height", m.height},
              {"width", m.width},
              {"frames", m.frames},
              {"splits",
               {{"train", m.splits.train_ids},
                {"val", m.splits.val_ids},
                {"test", m.splits.test_ids}}}};
}

Manifest manifest_from_json(const json& j) {
  try {
    Manifest m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != Manifest::kSchemaVersion) {
      fail(ErrorKind::schema_mismatch,
           "manifest schema_version " + std::to_string(m.schema_version) + " is not supported");
    }
    m.layout = parse_layout(j.at("layout").get<std::string>());
    m.height = j.at("height").get<int>();
    m.width = j.at("width").get<int>();
    m.frames = j.at("frames").get<std::vector<std::string>>();
    if (j.contains("splits")) {
      const json& s = j.at("splits");
      m.splits.train_ids = s.value("train", std::vector<std::string>{});
      m.splits.val_ids = s.value("val", std::vector<std::string>{});
      m.splits.test_ids = s.value("test", std::vector<std::string>{});
    }
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::schema_mismatch, std::string("manifest: ") + e.what());
  }
}

Manifest read_manifest(const fs::path& root) {
  return manifest_from_json(read_json_file(root / "manifest.json"));
}

std::vector<Frame> load_dataset(const fs::path& root, Layout layout) {
  if (!fs::is_directory(root)) {
    fail(ErrorKind::missing_directory, "dataset root " + root.string() + " does not exist");
  }
  std::optional<Manifest> manifest;
  std::vector<std::string> ids;
  if (fs::exists(root / "manifest.json")) {
    manifest = read_manifest(root);
    if (manifest->layout != layout) {
      fail(ErrorKind::schema_mismatch, "manifest layout is " +
                                           std::string(to_string(manifest->layout)) +
                                           ", requested " + std::string(to_string(layout)));
    }
    ids = manifest->frames;
  } else if (fs::is_directory(root / "frames")) {
    for (const auto& entry : fs::directory_iterator(root / "frames")) {
      if (entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
  }

  const FrameSource source = layout == Layout::synthetic ? FrameSource::synthetic
                                                         : FrameSource::real;
  std::vector<Frame> frames;
  frames.reserve(ids.size());
  int height = manifest ? manifest->height : -1;
  int width = manifest ? manifest->width : -1;
  for (const std::string& id : ids) {
    const fs::path png = root / "frames" / (id + ".png");
    Image img = read_png(png);
    if (img.cols() % 2 != 0) {
      fail(ErrorKind::malformed_image,
           png.string() + " has odd width " + std::to_string(img.cols()));
    }
    if (height < 0) {
      height = img.rows();
      width = img.cols();
    }
    if (img.rows() != height || img.cols() != width) {
      fail(ErrorKind::inconsistent_dimensions,
           png.string() + " is " + std::to_string(img.rows()) + "x" + std::to_string(img.cols()) +
               ", expected " + std::to_string(height) + "x" + std::to_string(width));
    }
    Frame f = Frame::from_interleaved(id, std::move(img), source);
    const fs::path sidecar = root / "gt" / (id + ".json");
    if (fs::exists(sidecar)) f.ground_truth = ground_truth_from_json(read_json_file(sidecar));
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_dataset(const fs::path& root, const std::vector<Frame>& frames,
                   const DatasetSplit& split, Layout layout) {
  std::error_code ec;
  fs::create_directories(root / "frames", ec);
  if (ec) fail(ErrorKind::io, "cannot create " + (root / "frames").string() + ": " + ec.message());
  Manifest m;
  m.layout = layout;
  m.splits = split;
  bool any_gt = false;
  for (const Frame& f : frames) {
    if (m.height == 0) {
      m.height = f.height();
      m.width = f.width();
    } else if (f.height() != m.height || f.width() != m.width) {
      fail(ErrorKind::inconsistent_dimensions, "frame " + f.frame_id + " differs in size");
    }
    m.frames.push_back(f.frame_id);
    write_png16(root / "frames" / (f.frame_id + ".png"), f.interleaved);
    if (f.ground_truth) {
      if (!any_gt) {
        fs::create_directories(root / "gt", ec);
        if (ec) fail(ErrorKind::io, "cannot create " + (root / "gt").string());
        any_gt = true;
      }
      write_json_file(root / "gt" / (f.frame_id + ".json"), to_json(*f.ground_truth));
    }
  }
  write_json_file(root / "manifest.json", to_json(m));
}

std::vector<Frame> select_frames(const std::vector<Frame>& frames,
                                 const std::vector<std::string>& ids) {
  std::vector<Frame> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    auto it = std::find_if(frames.begin(), frames.end(),
                           [&](const Frame& f) { return f.frame_id == id; });
    if (it == frames.end()) fail(ErrorKind::invalid_argument, "unknown frame id " + id);
    out.push_back(*it);
  }
  return out;
}

}  // namespace sasreg::data
