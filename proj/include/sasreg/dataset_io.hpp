#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sasreg/image.hpp"
#include "sasreg/scan_sim.hpp"

namespace sasreg::data {

enum class FrameSource { synthetic, real };
enum class Layout { synthetic, orpam4k };

std::string_view to_string(Layout layout);
Layout parse_layout(std::string_view text);

struct HalfPair {
  Image odd;   // columns 0,2,4,... of the interleaved frame
  Image even;  // columns 1,3,5,...
};

/// Splits an interleaved frame into its two scan-direction half images.
/// Odd widths are a shape-mismatch error.
HalfPair deinterleave(const Image& interleaved);

/// Inverse of deinterleave; the halves must have identical shapes.
Image interleave(const Image& odd_half, const Image& even_half);

/// Ground truth stored next to a synthetic frame. The phantom itself is not
/// written; it is reproducible from (height, width, scene_seed, vessel_count).
struct GroundTruthRecord {
  sim::AcquisitionParams params_odd;
  sim::AcquisitionParams params_even;
  std::uint64_t seed = 0;
  std::uint64_t scene_seed = 0;
  int vessel_count = 0;

  bool operator==(const GroundTruthRecord&) const = default;
};

nlohmann::json to_json(const GroundTruthRecord& gt);
GroundTruthRecord ground_truth_from_json(const nlohmann::json& j);

struct Frame {
  std::string frame_id;
  FrameSource source = FrameSource::synthetic;
  Image interleaved;
  Image odd_half;
  Image even_half;
  std::optional<GroundTruthRecord> ground_truth;

  /// Builds a frame (and its halves) from an interleaved image in [0,1].
  static Frame from_interleaved(std::string id, Image interleaved,
                                FrameSource source = FrameSource::synthetic);
  /// Builds a frame from two half images.
  static Frame from_halves(std::string id, Image odd_half, Image even_half,
                           FrameSource source = FrameSource::synthetic);

  int height() const { return interleaved.rows(); }
  int width() const { return interleaved.cols(); }
};

struct AugmentConfig {
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;
  double max_rotation_deg = 10.0;
  double scale_min = 0.9;
  double scale_max = 1.1;

  static AugmentConfig disabled() { return {0.0, 0.0, 0.0, 1.0, 1.0}; }
};

/// Random flips, rotation (edge-replicated fill) and intensity scaling with
/// clipping. The same geometric transform is applied to both halves; the
/// result is a pure function of (frame, seed, config).
Frame augment(const Frame& frame, std::uint64_t seed, const AugmentConfig& config);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
};

/// Seeded shuffle, then val = floor(n*val), test = floor(n*test) and the
/// remainder goes to train.
DatasetSplit split_dataset(std::vector<std::string> frame_ids, const SplitRatios& ratios,
                           std::uint64_t seed);

/// Same shuffle as split_dataset with explicit val/test sizes.
DatasetSplit split_dataset_counts(std::vector<std::string> frame_ids, std::size_t val_count,
                                  std::size_t test_count, std::uint64_t seed);

struct Manifest {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  Layout layout = Layout::synthetic;
  int height = 0;
  int width = 0;
  std::vector<std::string> frames;
  DatasetSplit splits;
};

nlohmann::json to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j);
Manifest read_manifest(const std::filesystem::path& root);

/// Loads every frame under root. A missing manifest is tolerated (frames
/// are enumerated from root/frames in name order); an empty directory
/// yields an empty list.
std::vector<Frame> load_dataset(const std::filesystem::path& root, Layout layout);

/// Writes root/manifest.json, root/frames/<id>.png and, for frames that carry
/// ground truth, root/gt/<id>.json.
void write_dataset(const std::filesystem::path& root, const std::vector<Frame>& frames,
                   const DatasetSplit& split, Layout layout);

/// Returns the frames whose ids appear in `ids`, in the order of `ids`.
std::vector<Frame> select_frames(const std::vector<Frame>& frames,
                                 const std::vector<std::string>& ids);

}  // namespace sasreg::data
