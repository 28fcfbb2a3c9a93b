#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sasreg/checkpoint.hpp"
#include "sasreg/dataset_io.hpp"
#include "sasreg/figures.hpp"
#include "sasreg/inference.hpp"
#include "sasreg/log.hpp"
#include "sasreg/metrics.hpp"
#include "sasreg/png_io.hpp"
#include "sasreg/synthetic.hpp"
#include "sasreg/trainer.hpp"

namespace sasreg::cli {
namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
    case ErrorKind::dimension_too_small:
    case ErrorKind::shape_mismatch:
      return kInvalidParams;
    case ErrorKind::io:
    case ErrorKind::missing_directory:
      return kIo;
    case ErrorKind::malformed_image:
    case ErrorKind::inconsistent_dimensions:
    case ErrorKind::empty_dataset:
      return kData;
    case ErrorKind::checkpoint:
    case ErrorKind::schema_mismatch:
      return kCheckpoint;
    case ErrorKind::training_diverged:
      return kDiverged;
    case ErrorKind::malformed_report:
      return kMalformedReport;
  }
  return kInternal;
}

namespace {

// ---------------------------------------------------------------- helpers

sim::Range parse_range(const std::string& text, const std::string& flag) {
  try {
    const auto colon = text.find(':');
    if (colon == std::string::npos) return sim::Range::fixed(std::stod(text));
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    fail(ErrorKind::invalid_argument, flag + ": expected a number or lo:hi, got '" + text + "'");
  }
}

void write_text(const fs::path& path, const std::string& text, CommandOutcome& out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  f << text;
  if (!f) fail(ErrorKind::io, "cannot write " + path.string());
  out.artifacts_written.push_back(path);
}

void write_json_file(const fs::path& path, const json& j, CommandOutcome& out) {
  write_text(path, j.dump(2) + "\n", out);
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

std::string pm(const metrics::MeanStd& s, int precision = 3) {
  return fmt(s.mean, precision) + " ± " + fmt(s.std, precision);
}

std::string psnr_cell(const metrics::PsnrStats& s) {
  if (s.finite.n == 0) return "inf";
  std::string cell = fmt(s.finite.mean, 2) + " ± " + fmt(s.finite.std, 2);
  if (s.infinite > 0) cell += " (" + std::to_string(s.infinite) + " inf)";
  return cell;
}

std::string metrics_table(const std::vector<metrics::MetricsReport>& reports) {
  std::ostringstream s;
  s << "| Method | SSIM | PSNR (dB) | NCC | VCI |\n|---|---|---|---|---|\n";
  if (!reports.empty()) {
    const auto& a = reports.front().aggregate;
    s << "| Original (unregistered) | " << pm(a.baseline_ssim) << " | "
      << psnr_cell(a.baseline_psnr_db) << " | " << pm(a.baseline_ncc) << " | "
      << pm(a.vci_before) << " |\n";
  }
  for (const auto& r : reports) {
    const auto& a = r.aggregate;
    s << "| " << r.method << " | " << pm(a.ssim) << " | " << psnr_cell(a.psnr_db) << " | "
      << pm(a.ncc) << " | " << pm(a.vci_after) << " |\n";
  }
  return s.str();
}

// Frames to operate on: a dataset root (with or without manifest), a
// directory of PNG frames, or a single PNG file.
std::vector<data::Frame> load_inputs(const fs::path& input, data::Layout layout) {
  if (!fs::exists(input)) fail(ErrorKind::missing_directory, "input not found: " + input.string());
  if (fs::is_regular_file(input)) {
    return {data::Frame::from_interleaved(input.stem().string(), read_png(input), data::FrameSource::real)};
  }
  if (fs::exists(input / "manifest.json") || fs::is_directory(input / "frames")) {
    return data::load_dataset(input, layout);
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(input)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<data::Frame> frames;
  for (const auto& f : files) {
    frames.push_back(data::Frame::from_interleaved(f.stem().string(), read_png(f), data::FrameSource::real));
  }
  return frames;
}

std::vector<data::Frame> select_split(const fs::path& dataset, const std::vector<data::Frame>& frames,
                                      const std::string& split) {
  if (split == "all") return frames;
  if (!fs::exists(dataset / "manifest.json")) {
    fail(ErrorKind::invalid_argument, "split '" + split + "' needs a dataset manifest");
  }
  const auto manifest = data::read_manifest(dataset);
  const auto& s = manifest.splits;
  if (split == "train") return data::select_frames(frames, s.train_ids);
  if (split == "val") return data::select_frames(frames, s.val_ids);
  if (split == "test") return data::select_frames(frames, s.test_ids);
  fail(ErrorKind::invalid_argument, "unknown split '" + split + "' (train, val, test, all)");
}

// ------------------------------------------------------------ train options

struct TrainArgs {
  train::TrainConfig config;
  std::string config_file;
  std::string dataset;
  std::string layout = "synthetic";
  std::string out_dir = "runs/default";
};

void add_train_options(CLI::App* sub, TrainArgs& a) {
  auto& c = a.config;
  sub->add_option("--config", a.config_file, "TOML file with [data] [model] [loss] [optim] [ablation] [run]");
  sub->add_option("--data.dataset", a.dataset, "dataset root")->required();
  sub->add_option("--data.layout", a.layout, "synthetic | orpam4k");
  sub->add_flag("--data.augment", c.data.augment, "enable augmentation");
  sub->add_option("--data.hflip_prob", c.data.augmentation.hflip_prob);
  sub->add_option("--data.vflip_prob", c.data.augmentation.vflip_prob);
  sub->add_option("--data.max_rotation_deg", c.data.augmentation.max_rotation_deg);
  sub->add_option("--data.scale_min", c.data.augmentation.scale_min, "intensity scaling lower bound");
  sub->add_option("--data.scale_max", c.data.augmentation.scale_max, "intensity scaling upper bound");
  sub->add_option("--data.train_ratio", c.data.split.train);
  sub->add_option("--data.val_ratio", c.data.split.val);
  sub->add_option("--data.test_ratio", c.data.split.test);
  sub->add_option("--data.split_seed", c.data.split_seed);
  sub->add_option("--model.scene_channels", c.model.scene_channels);
  sub->add_option("--model.code_dim", c.model.code_dim);
  sub->add_option("--model.scene_base", c.model.scene_base);
  sub->add_option("--model.appearance_base", c.model.appearance_base);
  sub->add_option("--model.levels", c.model.levels);
  sub->add_option("--model.norm_eps", c.model.norm_eps);
  sub->add_option("--loss.lambda_scene", c.loss.scene);
  sub->add_option("--loss.lambda_cycle", c.loss.cycle);
  sub->add_option("--loss.lambda_align", c.loss.align);
  sub->add_option("--loss.lambda_cos", c.loss.cos);
  sub->add_option("--loss.lambda_ssim", c.loss.ssim);
  sub->add_option("--loss.lambda_ncc", c.loss.ncc);
  sub->add_option("--loss.lambda_grad", c.loss.grad);
  sub->add_option("--optim.epochs", c.optim.epochs);
  sub->add_option("--optim.batch_size", c.optim.batch_size);
  sub->add_option("--optim.lr", c.optim.lr);
  sub->add_option("--optim.beta1", c.optim.beta1);
  sub->add_option("--optim.beta2", c.optim.beta2);
  sub->add_flag("--ablation.drop_scene", c.ablation.drop_scene);
  sub->add_flag("--ablation.drop_cycle", c.ablation.drop_cycle);
  sub->add_flag("--ablation.drop_align", c.ablation.drop_align);
  sub->add_flag("--ablation.drop_appearance_encoder", c.ablation.drop_appearance_encoder);
  sub->add_option("--run.seed", c.run.seed);
  sub->add_option("--run.out_dir", a.out_dir);
  sub->add_option("--run.checkpoint_every", c.run.checkpoint_every);
  sub->add_option("--run.log_every", c.run.log_every);
  sub->add_option("--run.device", c.run.device);
  sub->add_flag("--run.resume", c.run.resume);
}

train::TrainConfig finalize(TrainArgs& a) {
  a.config.data.dataset = a.dataset;
  a.config.data.layout = data::parse_layout(a.layout);
  a.config.run.out_dir = a.out_dir;
  a.config.validate();
  return a.config;
}

// Expands a TOML config into "--section.key=value" tokens.
std::vector<std::string> config_tokens(const std::string& path) {
  if (!fs::exists(path)) fail(ErrorKind::io, "config file not found: " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw CLI::ConversionError("config", std::string("cannot parse ") + path + ": " + e.what());
  }
  std::vector<std::string> tokens;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string key;
    for (const auto& p : item.parents) key += p + ".";
    key += item.name;
    if (item.inputs.size() != 1) {
      throw CLI::ConversionError(key, "config values must be scalars");
    }
    tokens.push_back("--" + key + "=" + item.inputs.front());
  }
  return tokens;
}

// Precedence: defaults < config file < SASREG_SEED < explicit flags.
std::vector<std::string> expand_args(const std::vector<std::string>& args) {
  if (args.empty() || (args[0] != "train" && args[0] != "ablate")) return args;
  std::string config;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  std::vector<std::string> out{args[0]};
  if (!config.empty()) {
    for (auto& t : config_tokens(config)) out.push_back(std::move(t));
  }
  if (const char* env = std::getenv("SASREG_SEED"); env != nullptr && *env != '\0') {
    out.push_back(std::string("--run.seed=") + env);
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

// --------------------------------------------------------------- commands

struct SimulateArgs {
  std::string out;
  int frames = 1;
  int height = 128;
  int width = 64;
  std::uint64_t seed = 0;
  std::string gain_odd = "1", gain_even = "1";
  std::string offset_odd = "0", offset_even = "0";
  std::string shift = "0", shift_odd = "0";
  double blur = 0.0;
  double noise = 0.0;
  int vessels_min = 6;
  int vessels_max = 12;
  bool shared_scene = false;
  int val_count = -1;
  int test_count = -1;
  double val_ratio = 0.1;
  double test_ratio = 0.1;
  std::uint64_t split_seed = 0;
};

CommandOutcome cmd_simulate(const SimulateArgs& a) {
  sim::SyntheticSpec spec;
  spec.count = a.frames;
  spec.height = a.height;
  spec.width = a.width;
  spec.seed = a.seed;
  spec.gain_odd = parse_range(a.gain_odd, "--gain-odd");
  spec.gain_even = parse_range(a.gain_even, "--gain-even");
  spec.offset_odd = parse_range(a.offset_odd, "--offset-odd");
  spec.offset_even = parse_range(a.offset_even, "--offset-even");
  spec.shift_even = parse_range(a.shift, "--shift");
  spec.shift_odd = parse_range(a.shift_odd, "--shift-odd");
  spec.blur_sigma = a.blur;
  spec.noise_sigma = a.noise;
  spec.vessels_min = a.vessels_min;
  spec.vessels_max = a.vessels_max;
  spec.shared_scene = a.shared_scene;
  if (a.frames < 1) fail(ErrorKind::invalid_argument, "--frames must be >= 1");
  spec.validate();
  const auto frames = sim::synthesize_frames(spec);

  std::vector<std::string> ids;
  for (const auto& f : frames) ids.push_back(f.frame_id);
  data::DatasetSplit split;
  if (a.val_count >= 0 || a.test_count >= 0) {
    split = data::split_dataset_counts(ids, std::max(a.val_count, 0), std::max(a.test_count, 0),
                                       a.split_seed);
  } else if (ids.size() >= 3) {
    split = data::split_dataset(ids, {1.0 - a.val_ratio - a.test_ratio, a.val_ratio, a.test_ratio},
                                a.split_seed);
  } else {
    split.train_ids = ids;
  }
  data::write_dataset(a.out, frames, split, data::Layout::synthetic);
  CommandOutcome out;
  out.artifacts_written.push_back(fs::path(a.out) / "manifest.json");
  for (const auto& f : frames) {
    out.artifacts_written.push_back(fs::path(a.out) / "frames" / (f.frame_id + ".png"));
    out.artifacts_written.push_back(fs::path(a.out) / "gt" / (f.frame_id + ".json"));
  }
  out.summary = "simulated " + std::to_string(frames.size()) + " frames into " + a.out + " (train " +
                std::to_string(split.train_ids.size()) + ", val " + std::to_string(split.val_ids.size()) +
                ", test " + std::to_string(split.test_ids.size()) + ")";
  return out;
}

CommandOutcome cmd_train(TrainArgs& a) {
  const auto config = finalize(a);
  const auto result = train::train(config);
  CommandOutcome out;
  const fs::path dir = config.run.out_dir;
  out.artifacts_written = {dir / "config.json", dir / "steps.jsonl", dir / "epochs.jsonl",
                           result.last_checkpoint, result.best_checkpoint};
  std::string tail;
  if (!result.epochs.empty()) {
    const auto& e = result.epochs.back();
    tail = ", last epoch total " + fmt(e.mean.total) +
           (e.val_ncc ? ", val ncc " + fmt(*e.val_ncc) : std::string());
  }
  out.summary = "trained " + std::to_string(result.epochs.size()) + " epochs (" +
                std::to_string(result.steps) + " steps)" + tail + "; best checkpoint " +
                result.best_checkpoint.string();
  return out;
}

struct RegisterArgs {
  std::string checkpoint;
  std::string input;
  std::string out;
  std::string layout = "synthetic";
  std::string split = "all";
  std::string device = "cpu";
};

CommandOutcome cmd_register(const RegisterArgs& a) {
  auto loaded = ckpt::load_checkpoint(a.checkpoint, train::resolve_device(a.device));
  auto frames = load_inputs(a.input, data::parse_layout(a.layout));
  if (a.split != "all") frames = select_split(a.input, frames, a.split);
  if (frames.empty()) fail(ErrorKind::empty_dataset, "no frames found in " + a.input);
  std::vector<Image> odd;
  std::vector<Image> even;
  for (const auto& f : frames) {
    odd.push_back(f.odd_half);
    even.push_back(f.even_half);
  }
  const auto registered = model::register_halves(loaded.net, odd, even);
  CommandOutcome out;
  const fs::path dir = a.out;
  fs::create_directories(dir);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    Image half = registered[i];
    clip(half);
    const auto p_half = dir / (frames[i].frame_id + "_even_to_odd.png");
    const auto p_full = dir / (frames[i].frame_id + "_corrected.png");
    write_png16(p_half, half);
    write_png16(p_full, data::interleave(frames[i].odd_half, half));
    out.artifacts_written.push_back(p_half);
    out.artifacts_written.push_back(p_full);
  }
  out.summary = "registered " + std::to_string(frames.size()) + " frames into " + a.out;
  return out;
}

struct EvalArgs {
  std::string checkpoint;
  std::string predictions;
  std::string dataset;
  std::string layout = "synthetic";
  std::string split = "test";
  std::string out = "metrics.json";
  std::string method = "sasreg";
  bool interframe = false;
  std::string device = "cpu";
};

CommandOutcome cmd_eval(const EvalArgs& a) {
  if (a.checkpoint.empty() == a.predictions.empty()) {
    fail(ErrorKind::invalid_argument, "eval needs exactly one of --checkpoint or --predictions");
  }
  auto frames = load_inputs(a.dataset, data::parse_layout(a.layout));
  frames = select_split(a.dataset, frames, a.split);
  if (frames.empty()) fail(ErrorKind::empty_dataset, "no frames in split '" + a.split + "'");

  metrics::MetricsReport report;
  if (!a.checkpoint.empty()) {
    auto loaded = ckpt::load_checkpoint(a.checkpoint, train::resolve_device(a.device));
    report = metrics::evaluate_dataset(frames, loaded.net, a.method, a.split);
  } else {
    const fs::path dir = a.predictions;
    if (!fs::is_directory(dir)) fail(ErrorKind::missing_directory, "missing " + dir.string());
    report = metrics::evaluate_dataset(
        frames,
        [&](const data::Frame& f) { return read_png(dir / (f.frame_id + "_even_to_odd.png")); },
        a.method, a.split);
  }
  if (a.interframe) {
    std::vector<Image> corrected;
    for (const auto& f : frames) {
      Image half = !a.predictions.empty()
                       ? read_png(fs::path(a.predictions) / (f.frame_id + "_even_to_odd.png"))
                       : Image();
      if (half.empty()) {
        auto loaded = ckpt::load_checkpoint(a.checkpoint, train::resolve_device(a.device));
        half = model::register_half(loaded.net, f.odd_half, f.even_half);
      }
      clip(half);
      corrected.push_back(data::interleave(f.odd_half, half));
    }
    report.interframe_ncc = metrics::interframe_ncc(corrected);
  }
  CommandOutcome out;
  metrics::write_metrics_report(a.out, report);
  out.artifacts_written.push_back(a.out);
  fs::path table = a.out;
  table.replace_extension(".md");
  write_text(table, metrics_table({report}), out);
  const auto& g = report.aggregate;
  out.summary = report.method + " on " + std::to_string(report.per_frame.size()) + " " + a.split +
                " frames: SSIM " + pm(g.ssim) + ", NCC " + pm(g.ncc) + ", PSNR " +
                psnr_cell(g.psnr_db) + " (unregistered NCC " + pm(g.baseline_ncc) + ")";
  return out;
}

CommandOutcome cmd_ablate(TrainArgs& a) {
  auto config = finalize(a);
  const auto frames = data::load_dataset(config.data.dataset, config.data.layout);
  if (frames.empty()) fail(ErrorKind::empty_dataset, "no frames in " + a.dataset);
  const auto manifest = data::read_manifest(config.data.dataset);
  const auto& s = manifest.splits;
  const auto table = train::run_ablation_suite(config, data::select_frames(frames, s.train_ids),
                                               data::select_frames(frames, s.val_ids),
                                               data::select_frames(frames, s.test_ids));
  CommandOutcome out;
  const fs::path dir = config.run.out_dir;
  write_json_file(dir / "ablation.json", train::to_json(table), out);
  write_text(dir / "ablation.md", train::ablation_markdown(table), out);
  for (const auto& row : table.rows) {
    out.artifacts_written.push_back(dir / row.variant.name / "metrics_test.json");
  }
  out.summary = "ablation over " + std::to_string(table.rows.size()) + " variants written to " +
                (dir / "ablation.md").string();
  return out;
}

struct BenchArgs {
  std::string checkpoint;
  int height = 512;
  int width = 256;
  int repetitions = 100;
  int warmup = 10;
  std::string out;
  std::string device = "cpu";
};

CommandOutcome cmd_bench(const BenchArgs& a) {
  const auto device = train::resolve_device(a.device);
  model::SasNet net{nullptr};
  if (!a.checkpoint.empty()) {
    net = ckpt::load_checkpoint(a.checkpoint, device).net;
  } else {
    net = model::SasNet(model::ModelConfig{});
    net->to(device);
  }
  const auto r = train::benchmark_inference(net, a.height, a.width, a.repetitions, a.warmup);
  CommandOutcome out;
  if (!a.out.empty()) write_json_file(a.out, train::to_json(r), out);
  out.summary = "inference " + std::to_string(a.height) + "x" + std::to_string(a.width) + " on " +
                r.device + ": " + fmt(r.mean_ms, 3) + " ± " + fmt(r.std_ms, 3) + " ms over " +
                std::to_string(r.timings_ms.size()) + " runs after " + std::to_string(r.warmup) +
                " warmups, " + fmt(r.fps, 2) + " fps";
  return out;
}

struct ReportArgs {
  std::vector<std::string> reports;
  std::string out = "report";
  bool baseline = true;
  std::string dataset;
  std::string checkpoint;
  std::string layout = "synthetic";
  int overlays = 4;
};

CommandOutcome cmd_report(const ReportArgs& a) {
  std::vector<metrics::MetricsReport> reports;
  for (const auto& p : a.reports) reports.push_back(metrics::read_metrics_report(p));
  CommandOutcome out;
  const fs::path dir = a.out;
  fs::create_directories(dir);

  struct Column {
    const char* name;
    double metrics::FrameMetrics::*value;
    double metrics::FrameMetrics::*baseline;
  };
  const Column columns[] = {
      {"ssim", &metrics::FrameMetrics::ssim, &metrics::FrameMetrics::baseline_ssim},
      {"psnr_db", &metrics::FrameMetrics::psnr_db, &metrics::FrameMetrics::baseline_psnr_db},
      {"ncc", &metrics::FrameMetrics::ncc, &metrics::FrameMetrics::baseline_ncc},
      {"vci", &metrics::FrameMetrics::vci_after, &metrics::FrameMetrics::vci_before},
  };
  json legend = json::array();
  if (a.baseline) legend.push_back("unregistered");
  for (const auto& r : reports) legend.push_back(r.method);
  for (const auto& col : columns) {
    std::vector<fig::BoxSeries> series;
    if (a.baseline) {
      fig::BoxSeries b{"unregistered", {}};
      for (const auto& f : reports.front().per_frame) b.values.push_back(f.*(col.baseline));
      series.push_back(std::move(b));
    }
    for (const auto& r : reports) {
      fig::BoxSeries s{r.method, {}};
      for (const auto& f : r.per_frame) s.values.push_back(f.*(col.value));
      series.push_back(std::move(s));
    }
    bool plottable = true;
    for (const auto& s : series) {
      plottable = plottable && std::any_of(s.values.begin(), s.values.end(),
                                           [](double v) { return std::isfinite(v); });
    }
    if (!plottable) continue;
    const auto path = dir / (std::string("box_") + col.name + ".png");
    write_png_rgb(path, fig::box_plot(series));
    out.artifacts_written.push_back(path);
  }
  write_json_file(dir / "box_legend.json", {{"series", legend}}, out);
  write_text(dir / "table.md", metrics_table(reports), out);

  if (!a.dataset.empty() && !a.checkpoint.empty() && a.overlays > 0) {
    auto loaded = ckpt::load_checkpoint(a.checkpoint);
    const auto frames = load_inputs(a.dataset, data::parse_layout(a.layout));
    std::vector<std::string> ids;
    for (const auto& f : reports.front().per_frame) {
      if (static_cast<int>(ids.size()) >= a.overlays) break;
      ids.push_back(f.frame_id);
    }
    for (const auto& f : data::select_frames(frames, ids)) {
      const auto registered = model::register_half(loaded.net, f.odd_half, f.even_half);
      const auto before = dir / ("overlay_" + f.frame_id + "_before.png");
      const auto after = dir / ("overlay_" + f.frame_id + "_after.png");
      write_png_rgb(before, fig::overlay(f.odd_half, f.even_half));
      write_png_rgb(after, fig::overlay(f.odd_half, registered));
      out.artifacts_written.push_back(before);
      out.artifacts_written.push_back(after);
    }
  }
  out.summary = "report for " + std::to_string(reports.size()) + " method(s) written to " + a.out;
  return out;
}

}  // namespace

CommandOutcome run(const std::vector<std::string>& raw_args) {
  CLI::App app{"sasreg: scene-appearance separation registration for bidirectional scans"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", "sasreg 1.0.0");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset with ground truth");
  simulate->add_option("--out", sim_args.out, "dataset root")->required();
  simulate->add_option("--frames", sim_args.frames);
  simulate->add_option("--height", sim_args.height);
  simulate->add_option("--width", sim_args.width, "interleaved width (even)");
  simulate->add_option("--seed", sim_args.seed);
  simulate->add_option("--gain-odd", sim_args.gain_odd, "value or lo:hi");
  simulate->add_option("--gain-even", sim_args.gain_even, "value or lo:hi");
  simulate->add_option("--offset-odd", sim_args.offset_odd, "value or lo:hi");
  simulate->add_option("--offset-even", sim_args.offset_even, "value or lo:hi");
  simulate->add_option("--shift", sim_args.shift, "even-direction column shift in px, value or lo:hi");
  simulate->add_option("--shift-odd", sim_args.shift_odd, "odd-direction column shift in px");
  simulate->add_option("--blur", sim_args.blur);
  simulate->add_option("--noise", sim_args.noise);
  simulate->add_option("--vessels-min", sim_args.vessels_min);
  simulate->add_option("--vessels-max", sim_args.vessels_max);
  simulate->add_flag("--shared-scene", sim_args.shared_scene, "one phantom for all frames");
  simulate->add_option("--val-count", sim_args.val_count);
  simulate->add_option("--test-count", sim_args.test_count);
  simulate->add_option("--val-ratio", sim_args.val_ratio);
  simulate->add_option("--test-ratio", sim_args.test_ratio);
  simulate->add_option("--split-seed", sim_args.split_seed);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train the registration network");
  add_train_options(train_cmd, train_args);

  TrainArgs ablate_args;
  auto* ablate = app.add_subcommand("ablate", "train and evaluate the ablation variants");
  add_train_options(ablate, ablate_args);

  RegisterArgs reg_args;
  auto* reg = app.add_subcommand("register", "write re-rendered even halves and corrected frames");
  reg->add_option("--checkpoint", reg_args.checkpoint)->required();
  reg->add_option("--input", reg_args.input, "PNG frame, directory of frames or dataset root")->required();
  reg->add_option("--out", reg_args.out)->required();
  reg->add_option("--layout", reg_args.layout);
  reg->add_option("--split", reg_args.split, "train | val | test | all");
  reg->add_option("--device", reg_args.device);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "evaluate registration quality on a dataset split");
  eval->add_option("--checkpoint", eval_args.checkpoint);
  eval->add_option("--predictions", eval_args.predictions, "directory with <id>_even_to_odd.png");
  eval->add_option("--dataset", eval_args.dataset)->required();
  eval->add_option("--layout", eval_args.layout);
  eval->add_option("--split", eval_args.split, "train | val | test | all");
  eval->add_option("--out", eval_args.out);
  eval->add_option("--method", eval_args.method);
  eval->add_flag("--interframe", eval_args.interframe, "also report consecutive-frame NCC");
  eval->add_option("--device", eval_args.device);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "measure inference latency");
  bench->add_option("--checkpoint", bench_args.checkpoint, "omit to time a freshly initialized model");
  bench->add_option("--height", bench_args.height);
  bench->add_option("--width", bench_args.width, "interleaved frame width");
  bench->add_option("--repetitions", bench_args.repetitions);
  bench->add_option("--warmup", bench_args.warmup);
  bench->add_option("--out", bench_args.out);
  bench->add_option("--device", bench_args.device);

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "render figures and tables from metrics reports");
  report->add_option("--report", report_args.reports, "metrics report JSON (repeatable)")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  report->add_option("--out", report_args.out);
  report->add_flag("--baseline,!--no-baseline", report_args.baseline);
  report->add_option("--dataset", report_args.dataset, "dataset for overlay figures");
  report->add_option("--checkpoint", report_args.checkpoint, "checkpoint for overlay figures");
  report->add_option("--layout", report_args.layout);
  report->add_option("--overlays", report_args.overlays);

  CommandOutcome outcome;
  try {
    auto args = expand_args(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    outcome.summary = app.help();
    return outcome;
  } catch (const CLI::CallForAllHelp& e) {
    outcome.summary = app.help("", CLI::AppFormatMode::All);
    return outcome;
  } catch (const CLI::CallForVersion& e) {
    outcome.summary = "sasreg 1.0.0";
    return outcome;
  } catch (const CLI::ParseError& e) {
    outcome.exit_code = kUsage;
    outcome.summary = std::string("usage error: ") + e.what();
    return outcome;
  } catch (const Error& e) {
    outcome.exit_code = exit_code_for(e.kind());
    outcome.summary = std::string(to_string(e.kind())) + ": " + e.what();
    return outcome;
  }

  try {
    if (*simulate) return cmd_simulate(sim_args);
    if (*train_cmd) return cmd_train(train_args);
    if (*ablate) return cmd_ablate(ablate_args);
    if (*reg) return cmd_register(reg_args);
    if (*eval) return cmd_eval(eval_args);
    if (*bench) return cmd_bench(bench_args);
    if (*report) return cmd_report(report_args);
  } catch (const Error& e) {
    outcome.exit_code = exit_code_for(e.kind());
    outcome.summary = std::string(to_string(e.kind())) + ": " + e.what();
    return outcome;
  } catch (const fs::filesystem_error& e) {
    outcome.exit_code = kIo;
    outcome.summary = std::string("io: ") + e.what();
    return outcome;
  } catch (const std::exception& e) {
    outcome.exit_code = kInternal;
    outcome.summary = std::string("internal error: ") + e.what();
    return outcome;
  }
  outcome.exit_code = kUsage;
  outcome.summary = "no subcommand given";
  return outcome;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const auto outcome = run(args);
  auto& stream = outcome.exit_code == kOk ? std::cout : std::cerr;
  stream << outcome.summary << '\n';
  if (outcome.exit_code == kOk) {
    for (const auto& p : outcome.artifacts_written) std::cout << "  wrote " << p.string() << '\n';
  }
  return outcome.exit_code;
}

}  // namespace sasreg::cli
