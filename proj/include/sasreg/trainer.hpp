#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "sasreg/dataset_io.hpp"
#include "sasreg/losses.hpp"
#include "sasreg/metrics.hpp"
#include "sasreg/model.hpp"

namespace sasreg::train {

struct DataConfig {
  std::filesystem::path dataset;
  data::Layout layout = data::Layout::synthetic;
  bool augment = true;
  data::AugmentConfig augmentation;
  // Used only when the manifest carries no split.
  data::SplitRatios split;
  std::uint64_t split_seed = 0;
};

struct OptimConfig {
  int epochs = 200;
  int batch_size = 4;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "runs/default";
  int checkpoint_every = 1;  // epochs between numbered checkpoints
  int log_every = 50;        // steps between progress lines on stderr
  std::string device = "cpu";
  bool resume = false;
};

struct TrainConfig {
  DataConfig data;
  model::ModelConfig model;
  loss::LossWeights loss;
  OptimConfig optim;
  loss::AblationFlags ablation;
  RunConfig run;

  /// Throws ErrorKind::invalid_argument on lr <= 0, batch < 1, epochs < 0,
  /// checkpoint_every < 1, negative weights or an invalid model shape.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);

/// Network settings actually trained: drop_appearance_encoder switches the
/// model to learned per-direction codes.
model::ModelConfig effective_model_config(const TrainConfig& config);

/// Parses "cpu", "cuda", "cuda:N"; SASREG_DEVICE overrides `requested`.
torch::Device resolve_device(const std::string& requested);

struct EpochSummary {
  int epoch = 0;
  std::int64_t steps = 0;  // cumulative
  loss::LossBreakdown mean;
  std::optional<double> val_ncc;
  double seconds = 0.0;
};

nlohmann::json to_json(const EpochSummary& e);

struct TrainResult {
  std::filesystem::path last_checkpoint;
  std::filesystem::path best_checkpoint;
  std::vector<EpochSummary> epochs;  // epochs run by this call
  std::int64_t steps = 0;            // total optimizer steps including resumed ones
};

/// Epochs of minibatch steps: augment -> halves -> forward pass -> weighted
/// objective -> Adam update. Writes <out>/steps.jsonl, <out>/epochs.jsonl,
/// <out>/config.json and checkpoints under <out>/checkpoints (epoch_NNNN,
/// last, best by validation NCC). Throws ErrorKind::empty_dataset without
/// training frames and ErrorKind::training_diverged on a non-finite loss.
TrainResult train(const TrainConfig& config, const std::vector<data::Frame>& train_frames,
                  const std::vector<data::Frame>& val_frames);

/// Loads config.data.dataset and trains on its train/val split.
TrainResult train(const TrainConfig& config);

/// One objective evaluation on a batch of half images [N,1,H,W].
loss::Objective training_objective(model::SasNet& net, const torch::Tensor& odd,
                                   const torch::Tensor& even, const loss::LossWeights& weights);

/// Mean NCC(G(E_S(even), A_odd), odd) over the frames.
double validation_ncc(model::SasNet& net, const std::vector<data::Frame>& frames);

struct AblationVariant {
  std::string name;
  loss::AblationFlags flags;
};

/// full, w/o scene, w/o cycle, w/o align, w/o appearance encoder.
std::vector<AblationVariant> standard_ablation_variants();

struct AblationRow {
  AblationVariant variant;
  metrics::MetricsReport report;
  std::filesystem::path checkpoint;
};

struct AblationTable {
  std::vector<AblationRow> rows;
};

/// Trains every variant under the same seed and budget in
/// <out>/<variant name>, evaluates its best checkpoint on `test_frames`.
/// With config.run.resume a finished variant is evaluated without retraining.
AblationTable run_ablation_suite(const TrainConfig& base,
                                 const std::vector<data::Frame>& train_frames,
                                 const std::vector<data::Frame>& val_frames,
                                 const std::vector<data::Frame>& test_frames,
                                 const std::vector<AblationVariant>& variants =
                                     standard_ablation_variants());

nlohmann::json to_json(const AblationTable& table);
std::string ablation_markdown(const AblationTable& table);

struct BenchmarkResult {
  std::vector<double> timings_ms;  // timed runs only
  int warmup = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;  // sample standard deviation
  double fps = 0.0;     // 1000 / mean_ms
  int frame_rows = 0;
  int frame_cols = 0;
  std::string device;
};

nlohmann::json to_json(const BenchmarkResult& b);

/// Latency of one registration pass (odd/even halves of a frame_rows x
/// frame_cols interleaved frame -> G(E_S(even), A_odd)); `warmup` runs are
/// discarded before `repetitions` timed runs.
BenchmarkResult benchmark_inference(model::SasNet& net, int frame_rows, int frame_cols,
                                    int repetitions = 100, int warmup = 10);

}  // namespace sasreg::train
