#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>
#include <torch/torch.h>

#include "sasreg/losses.hpp"
#include "sasreg/model.hpp"

// Checkpoint = torch parameter archive (<name>.pt) + sidecar JSON
// (<name>.json) describing the architecture and training position, and an
// optional optimizer archive (<name>.optim.pt) for resuming.
namespace sasreg::ckpt {

struct CheckpointMeta {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  model::ModelConfig model;
  std::int64_t parameter_count = 0;
  std::int64_t step = 0;
  int epoch = 0;
  loss::LossWeights weights;
  loss::AblationFlags ablation;
  std::optional<double> val_ncc;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const model::ModelConfig& c);
model::ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CheckpointMeta& m);
/// Throws ErrorKind::schema_mismatch on an unknown schema_version and
/// ErrorKind::checkpoint on missing fields.
CheckpointMeta checkpoint_meta_from_json(const nlohmann::json& j);

std::filesystem::path sidecar_path(const std::filesystem::path& blob);
std::filesystem::path optimizer_path(const std::filesystem::path& blob);

/// Writes the parameter archive and sidecar (and optimizer state when given).
/// Each file is written to a temporary name and renamed into place.
void save_checkpoint(const std::filesystem::path& blob, model::SasNet& net,
                     const CheckpointMeta& meta, torch::optim::Optimizer* optimizer = nullptr);

struct LoadedCheckpoint {
  model::SasNet net{nullptr};
  CheckpointMeta meta;
};

/// Rebuilds the network described by the sidecar and loads its weights.
/// Missing files are ErrorKind::checkpoint; a parameter count disagreeing
/// with the sidecar is ErrorKind::schema_mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& blob,
                                 torch::Device device = torch::kCPU);

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& blob);

/// Restores optimizer moments saved next to `blob`; returns false if none exist.
bool load_optimizer_state(const std::filesystem::path& blob, torch::optim::Optimizer& optimizer);

/// Copies the three checkpoint files of `from` to `to`.
void copy_checkpoint(const std::filesystem::path& from, const std::filesystem::path& to);

}  // namespace sasreg::ckpt
