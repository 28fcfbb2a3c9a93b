#include "sasreg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "sasreg/checkpoint.hpp"
#include "sasreg/error.hpp"
#include "sasreg/inference.hpp"
#include "sasreg/log.hpp"
#include "sasreg/seeding.hpp"

namespace sasreg::train {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kOrderStream = 0x6f72646572;
constexpr std::uint64_t kAugmentStream = 0x617567;
constexpr std::uint64_t kBenchStream = 0x62656e6368;

std::string epoch_name(int epoch) {
  std::ostringstream s;
  s << "epoch_" << std::setw(4) << std::setfill('0') << epoch << ".pt";
  return s.str();
}

void append_line(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::app);
  out << j.dump() << '\n';
  if (!out) fail(ErrorKind::io, "cannot append to " + path.string());
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
}

struct BreakdownSum {
  loss::LossBreakdown sum;
  std::int64_t count = 0;

  void add(const loss::LossBreakdown& b) {
    sum.scene += b.scene;
    sum.cycle += b.cycle;
    sum.align += b.align;
    sum.scene_mse += b.scene_mse;
    sum.scene_cos += b.scene_cos;
    sum.cycle_mse += b.cycle_mse;
    sum.cycle_ssim += b.cycle_ssim;
    sum.align_mse += b.align_mse;
    sum.align_ncc += b.align_ncc;
    sum.align_grad += b.align_grad;
    ++count;
  }

  loss::LossBreakdown mean(const loss::LossWeights& w) const {
    const double n = count > 0 ? static_cast<double>(count) : 1.0;
    auto m = loss::total_loss(sum.scene / n, sum.cycle / n, sum.align / n, w);
    m.scene_mse = sum.scene_mse / n;
    m.scene_cos = sum.scene_cos / n;
    m.cycle_mse = sum.cycle_mse / n;
    m.cycle_ssim = sum.cycle_ssim / n;
    m.align_mse = sum.align_mse / n;
    m.align_ncc = sum.align_ncc / n;
    m.align_grad = sum.align_grad / n;
    return m;
  }
};

std::optional<double> read_best_val(const fs::path& best) {
  if (!fs::exists(best)) return std::nullopt;
  return ckpt::read_checkpoint_meta(best).val_ncc;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(optim.lr > 0.0) || !std::isfinite(optim.lr)) {
    fail(ErrorKind::invalid_argument, "optim.lr must be > 0");
  }
  if (optim.batch_size < 1) fail(ErrorKind::invalid_argument, "optim.batch_size must be >= 1");
  if (optim.epochs < 0) fail(ErrorKind::invalid_argument, "optim.epochs must be >= 0");
  if (optim.beta1 < 0.0 || optim.beta1 >= 1.0 || optim.beta2 < 0.0 || optim.beta2 >= 1.0) {
    fail(ErrorKind::invalid_argument, "optim.beta1/beta2 must lie in [0, 1)");
  }
  if (run.checkpoint_every < 1) {
    fail(ErrorKind::invalid_argument, "run.checkpoint_every must be >= 1");
  }
  if (run.log_every < 1) fail(ErrorKind::invalid_argument, "run.log_every must be >= 1");
  loss.validate();
  if (model.levels < 1 || model.scene_base < 1 || model.appearance_base < 1 ||
      model.scene_channels < 1 || model.code_dim < 1 || !(model.norm_eps > 0.0)) {
    fail(ErrorKind::invalid_argument, "invalid model configuration");
  }
  const auto& a = data.augmentation;
  if (a.hflip_prob < 0.0 || a.hflip_prob > 1.0 || a.vflip_prob < 0.0 || a.vflip_prob > 1.0 ||
      a.max_rotation_deg < 0.0 || a.scale_min <= 0.0 || a.scale_max < a.scale_min) {
    fail(ErrorKind::invalid_argument, "invalid augmentation settings");
  }
}

json to_json(const TrainConfig& c) {
  const auto& a = c.data.augmentation;
  return {
      {"data",
       {{"dataset", c.data.dataset.string()},
        {"layout", std::string(data::to_string(c.data.layout))},
        {"augment", c.data.augment},
        {"hflip_prob", a.hflip_prob},
        {"vflip_prob", a.vflip_prob},
        {"max_rotation_deg", a.max_rotation_deg},
        {"scale_min", a.scale_min},
        {"scale_max", a.scale_max},
        {"train_ratio", c.data.split.train},
        {"val_ratio", c.data.split.val},
        {"test_ratio", c.data.split.test},
        {"split_seed", c.data.split_seed}}},
      {"model", ckpt::to_json(c.model)},
      {"loss", loss::to_json(c.loss)},
      {"optim",
       {{"epochs", c.optim.epochs},
        {"batch_size", c.optim.batch_size},
        {"lr", c.optim.lr},
        {"beta1", c.optim.beta1},
        {"beta2", c.optim.beta2}}},
      {"ablation", loss::to_json(c.ablation)},
      {"run",
       {{"seed", c.run.seed},
        {"out_dir", c.run.out_dir.string()},
        {"checkpoint_every", c.run.checkpoint_every},
        {"log_every", c.run.log_every},
        {"device", c.run.device},
        {"resume", c.run.resume}}}};
}

model::ModelConfig effective_model_config(const TrainConfig& config) {
  model::ModelConfig m = config.model;
  if (config.ablation.drop_appearance_encoder) m.learned_domain_codes = true;
  return m;
}

torch::Device resolve_device(const std::string& requested) {
  std::string name = requested;
  if (const char* env = std::getenv("SASREG_DEVICE"); env != nullptr && *env != '\0') name = env;
  torch::Device device(torch::kCPU);
  try {
    device = torch::Device(name);
  } catch (const c10::Error&) {
    fail(ErrorKind::invalid_argument, "unknown device '" + name + "'");
  }
  if (device.is_cuda() && !torch::cuda::is_available()) {
    fail(ErrorKind::invalid_argument, "device '" + name + "' requested but CUDA is unavailable");
  }
  if (!device.is_cpu() && !device.is_cuda()) {
    fail(ErrorKind::invalid_argument, "unsupported device '" + name + "'");
  }
  return device;
}

json to_json(const EpochSummary& e) {
  json j = loss::to_json(e.mean);
  j["epoch"] = e.epoch;
  j["steps"] = e.steps;
  j["seconds"] = e.seconds;
  j["val_ncc"] = e.val_ncc ? json(*e.val_ncc) : json(nullptr);
  return j;
}

loss::Objective training_objective(model::SasNet& net, const torch::Tensor& odd,
                                   const torch::Tensor& even, const loss::LossWeights& weights) {
  auto p = net->training_pass(odd, even);
  auto scene = loss::scene_loss_terms(p.scene_odd, p.scene_even, weights.cos);
  auto cycle = loss::cycle_loss_terms(odd, even, p.self_odd, p.self_even, weights.ssim);
  auto align = loss::align_loss_terms(p.even_to_odd, odd, weights.ncc, weights.grad);
  return loss::total_loss(scene, cycle, align, weights);
}

double validation_ncc(model::SasNet& net, const std::vector<data::Frame>& frames) {
  if (frames.empty()) fail(ErrorKind::empty_dataset, "validation_ncc: no frames");
  std::vector<Image> odd;
  std::vector<Image> even;
  for (const auto& f : frames) {
    odd.push_back(f.odd_half);
    even.push_back(f.even_half);
  }
  const auto registered = model::register_halves(net, odd, even);
  double sum = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) sum += metrics::ncc(registered[i], odd[i]);
  return sum / static_cast<double>(frames.size());
}

TrainResult train(const TrainConfig& config, const std::vector<data::Frame>& train_frames,
                  const std::vector<data::Frame>& val_frames) {
  config.validate();
  if (train_frames.empty()) fail(ErrorKind::empty_dataset, "train: no training frames");
  const torch::Device device = resolve_device(config.run.device);
  const auto model_config = effective_model_config(config);
  const auto weights = loss::apply_ablation(config.loss, config.ablation);

  const fs::path out = config.run.out_dir;
  const fs::path ckpt_dir = out / "checkpoints";
  const fs::path last = ckpt_dir / "last.pt";
  const fs::path best = ckpt_dir / "best.pt";
  const fs::path steps_log = out / "steps.jsonl";
  const fs::path epochs_log = out / "epochs.jsonl";
  fs::create_directories(ckpt_dir);

  torch::manual_seed(static_cast<std::uint64_t>(derive_seed(config.run.seed, {0x696e6974})));
  model::SasNet net(model_config);
  net->to(device);
  torch::optim::Adam optimizer(
      net->parameters(),
      torch::optim::AdamOptions(config.optim.lr).betas({config.optim.beta1, config.optim.beta2}));

  int start_epoch = 1;
  std::int64_t step = 0;
  std::optional<double> best_val;
  const bool resuming = config.run.resume && fs::exists(last);
  if (resuming) {
    const auto meta = ckpt::read_checkpoint_meta(last);
    if (meta.model != model_config || meta.weights != weights || meta.ablation != config.ablation) {
      fail(ErrorKind::checkpoint, "cannot resume " + last.string() +
                                      ": model, loss weights or ablation flags differ");
    }
    torch::load(net, last.string());
    net->to(device);
    ckpt::load_optimizer_state(last, optimizer);
    start_epoch = meta.epoch + 1;
    step = meta.step;
    best_val = read_best_val(best);
    log::info("resuming " + out.string() + " after epoch " + std::to_string(meta.epoch));
  } else {
    std::ofstream(steps_log, std::ios::trunc);
    std::ofstream(epochs_log, std::ios::trunc);
  }
  write_json(out / "config.json", to_json(config));

  ckpt::CheckpointMeta meta;
  meta.model = model_config;
  meta.parameter_count = model::parameter_count(*net);
  meta.weights = weights;
  meta.ablation = config.ablation;
  meta.seed = config.run.seed;

  TrainResult result;
  result.last_checkpoint = last;
  result.best_checkpoint = best;

  const int batch = config.optim.batch_size;
  std::vector<std::size_t> order(train_frames.size());
  for (int epoch = start_epoch; epoch <= config.optim.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    net->train();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 order_rng(derive_seed(config.run.seed, {kOrderStream, std::uint64_t(epoch)}));
    std::shuffle(order.begin(), order.end(), order_rng);

    BreakdownSum sums;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch));
      std::vector<data::Frame> frames;
      frames.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const auto& f = train_frames[order[i]];
        if (config.data.augment) {
          const auto seed = derive_seed(config.run.seed,
                                        {kAugmentStream, std::uint64_t(epoch), std::uint64_t(order[i])});
          frames.push_back(data::augment(f, seed, config.data.augmentation));
        } else {
          frames.push_back(f);
        }
      }
      std::vector<const Image*> odd;
      std::vector<const Image*> even;
      for (const auto& f : frames) {
        odd.push_back(&f.odd_half);
        even.push_back(&f.even_half);
      }
      auto t_odd = model::stack_images(odd).to(device);
      auto t_even = model::stack_images(even).to(device);

      auto objective = training_objective(net, t_odd, t_even, weights);
      ++step;
      if (!std::isfinite(objective.breakdown.total) ||
          !std::isfinite(objective.total.detach().item<double>())) {
        fail(ErrorKind::training_diverged,
             "non-finite loss at epoch " + std::to_string(epoch) + " step " +
                 std::to_string(step) + ": " + loss::to_json(objective.breakdown).dump());
      }
      optimizer.zero_grad();
      if (objective.total.requires_grad()) {
        objective.total.backward();
        optimizer.step();
      }
      sums.add(objective.breakdown);

      json line = loss::to_json(objective.breakdown);
      line["step"] = step;
      line["epoch"] = epoch;
      append_line(steps_log, line);
      if (step % config.run.log_every == 0) {
        log::info("epoch " + std::to_string(epoch) + " step " + std::to_string(step) +
                  " total " + std::to_string(objective.breakdown.total));
      }
    }

    EpochSummary summary;
    summary.epoch = epoch;
    summary.steps = step;
    summary.mean = sums.mean(weights);
    if (!val_frames.empty()) summary.val_ncc = validation_ncc(net, val_frames);
    summary.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    meta.step = step;
    meta.epoch = epoch;
    meta.val_ncc = summary.val_ncc;
    ckpt::save_checkpoint(last, net, meta, &optimizer);
    if (epoch % config.run.checkpoint_every == 0 || epoch == config.optim.epochs) {
      ckpt::copy_checkpoint(last, ckpt_dir / epoch_name(epoch));
    }
    const bool improved = !best_val || !summary.val_ncc || *summary.val_ncc > *best_val;
    if (improved) {
      ckpt::copy_checkpoint(last, best);
      best_val = summary.val_ncc;
    }
    append_line(epochs_log, to_json(summary));
    log::info("epoch " + std::to_string(epoch) + " done in " + std::to_string(summary.seconds) +
              " s, mean total " + std::to_string(summary.mean.total) +
              (summary.val_ncc ? ", val ncc " + std::to_string(*summary.val_ncc) : std::string()));
    result.epochs.push_back(summary);
  }
  result.steps = step;
  if (!fs::exists(last)) {
    // Zero-epoch run: persist the initial weights so downstream commands work.
    meta.step = 0;
    meta.epoch = 0;
    ckpt::save_checkpoint(last, net, meta, &optimizer);
  }
  if (!fs::exists(best)) ckpt::copy_checkpoint(last, best);
  return result;
}

TrainResult train(const TrainConfig& config) {
  const auto frames = data::load_dataset(config.data.dataset, config.data.layout);
  if (frames.empty()) fail(ErrorKind::empty_dataset, "no frames in " + config.data.dataset.string());
  data::DatasetSplit split;
  const fs::path manifest = config.data.dataset / "manifest.json";
  if (fs::exists(manifest)) split = data::read_manifest(config.data.dataset).splits;
  if (split.train_ids.empty()) {
    std::vector<std::string> ids;
    for (const auto& f : frames) ids.push_back(f.frame_id);
    split = data::split_dataset(ids, config.data.split, config.data.split_seed);
  }
  return train(config, data::select_frames(frames, split.train_ids),
               data::select_frames(frames, split.val_ids));
}

std::vector<AblationVariant> standard_ablation_variants() {
  std::vector<AblationVariant> v(5);
  v[0].name = "full";
  v[1].name = "wo_scene";
  v[1].flags.drop_scene = true;
  v[2].name = "wo_cycle";
  v[2].flags.drop_cycle = true;
  v[3].name = "wo_align";
  v[3].flags.drop_align = true;
  v[4].name = "wo_appearance_encoder";
  v[4].flags.drop_appearance_encoder = true;
  return v;
}

AblationTable run_ablation_suite(const TrainConfig& base,
                                 const std::vector<data::Frame>& train_frames,
                                 const std::vector<data::Frame>& val_frames,
                                 const std::vector<data::Frame>& test_frames,
                                 const std::vector<AblationVariant>& variants) {
  if (test_frames.empty()) fail(ErrorKind::empty_dataset, "ablation: no test frames");
  AblationTable table;
  for (const auto& variant : variants) {
    TrainConfig config = base;
    config.ablation = variant.flags;
    config.run.out_dir = base.run.out_dir / variant.name;
    log::info("ablation variant " + variant.name);
    const auto result = train(config, train_frames, val_frames);
    auto loaded = ckpt::load_checkpoint(result.best_checkpoint, resolve_device(config.run.device));
    AblationRow row;
    row.variant = variant;
    row.checkpoint = result.best_checkpoint;
    row.report = metrics::evaluate_dataset(test_frames, loaded.net, variant.name, "test");
    metrics::write_metrics_report(config.run.out_dir / "metrics_test.json", row.report);
    table.rows.push_back(std::move(row));
  }
  return table;
}

json to_json(const AblationTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    const auto& a = r.report.aggregate;
    rows.push_back({{"name", r.variant.name},
                    {"ablation", loss::to_json(r.variant.flags)},
                    {"checkpoint", r.checkpoint.string()},
                    {"ssim", {{"mean", a.ssim.mean}, {"std", a.ssim.std}}},
                    {"psnr_db", {{"mean", a.psnr_db.finite.mean}, {"std", a.psnr_db.finite.std}}},
                    {"ncc", {{"mean", a.ncc.mean}, {"std", a.ncc.std}}},
                    {"vci_after", {{"mean", a.vci_after.mean}, {"std", a.vci_after.std}}}});
  }
  return {{"rows", rows}};
}

std::string ablation_markdown(const AblationTable& table) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3);
  s << "| Configuration | SSIM | PSNR (dB) | NCC |\n|---|---|---|---|\n";
  for (const auto& r : table.rows) {
    const auto& a = r.report.aggregate;
    s << "| " << r.variant.name << " | " << a.ssim.mean << " ± " << a.ssim.std << " | "
      << std::setprecision(2) << a.psnr_db.finite.mean << " ± " << a.psnr_db.finite.std
      << std::setprecision(3) << " | " << a.ncc.mean << " ± " << a.ncc.std << " |\n";
  }
  return s.str();
}

json to_json(const BenchmarkResult& b) {
  return {{"frame_rows", b.frame_rows}, {"frame_cols", b.frame_cols}, {"device", b.device},
          {"warmup", b.warmup},         {"repetitions", b.timings_ms.size()},
          {"mean_ms", b.mean_ms},       {"std_ms", b.std_ms},
          {"fps", b.fps},               {"timings_ms", b.timings_ms}};
}

BenchmarkResult benchmark_inference(model::SasNet& net, int frame_rows, int frame_cols,
                                    int repetitions, int warmup) {
  if (repetitions < 1 || warmup < 0) {
    fail(ErrorKind::invalid_argument, "benchmark: repetitions must be >= 1 and warmup >= 0");
  }
  if (frame_rows < 1 || frame_cols < 2 || frame_cols % 2 != 0) {
    fail(ErrorKind::invalid_argument, "benchmark: frame shape must be positive with even width");
  }
  const auto device = model::device_of(net);
  const int levels = net->config().levels;
  auto [ph, pw] = model::padded_shape(frame_rows, frame_cols / 2, levels);
  torch::manual_seed(kBenchStream);
  auto odd = torch::rand({1, 1, ph, pw}).to(device);
  auto even = torch::rand({1, 1, ph, pw}).to(device);

  torch::NoGradGuard no_grad;
  net->eval();
  auto run_once = [&] {
    auto out = net->register_even(odd, even);
    if (device.is_cuda()) torch::cuda::synchronize();
    return out;
  };
  for (int i = 0; i < warmup; ++i) run_once();
  BenchmarkResult r;
  r.warmup = warmup;
  r.frame_rows = frame_rows;
  r.frame_cols = frame_cols;
  r.device = device.str();
  r.timings_ms.reserve(repetitions);
  for (int i = 0; i < repetitions; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    run_once();
    r.timings_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  const auto stats = metrics::mean_std(r.timings_ms);
  r.mean_ms = stats.mean;
  r.std_ms = stats.std;
  r.fps = 1000.0 / r.mean_ms;
  return r;
}

}  // namespace sasreg::train
