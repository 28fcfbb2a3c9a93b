#include "sasreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "sasreg/error.hpp"
#include "sasreg/inference.hpp"

namespace sasreg::metrics {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_shape(const Image& x, const Image& y, const char* what) {
  if (!x.same_shape(y)) fail(ErrorKind::shape_mismatch, std::string(what) + ": shapes differ");
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json to_json(const MeanStd& s) { return {{"mean", s.mean}, {"std", s.std}, {"n", s.n}}; }

nlohmann::json to_json(const PsnrStats& s) {
  return {{"mean", number_or_null(s.finite.mean)},
          {"std", s.finite.std},
          {"n_finite", s.finite.n},
          {"n_infinite", s.infinite}};
}

PsnrStats psnr_stats(std::span<const FrameMetrics> frames, double FrameMetrics::*field) {
  std::vector<double> finite;
  PsnrStats s;
  for (const auto& f : frames) {
    const double v = f.*field;
    if (std::isfinite(v)) {
      finite.push_back(v);
    } else {
      ++s.infinite;
    }
  }
  s.finite = mean_std(finite);
  if (finite.empty() && s.infinite > 0) s.finite.mean = kInf;
  return s;
}

MeanStd field_stats(std::span<const FrameMetrics> frames, double FrameMetrics::*field) {
  std::vector<double> v;
  v.reserve(frames.size());
  for (const auto& f : frames) v.push_back(f.*field);
  return mean_std(v);
}

double psnr_from_json(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return kInf;
  return v.get<double>();
}

}  // namespace

double psnr(const Image& x, const Image& y, double peak) {
  require_same_shape(x, y, "psnr");
  if (x.empty()) fail(ErrorKind::invalid_argument, "psnr: empty images");
  double sum = 0.0;
  auto px = x.pixels();
  auto py = y.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) sum += (px[i] - py[i]) * (px[i] - py[i]);
  const double mse = sum / static_cast<double>(px.size());
  if (mse == 0.0) return kInf;
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& x, const Image& y, const loss::SsimOptions& options) {
  require_same_shape(x, y, "ssim");
  return loss::differentiable_ssim(model::to_tensor(x, torch::kFloat64),
                                   model::to_tensor(y, torch::kFloat64), options)
      .item<double>();
}

double ncc(const Image& x, const Image& y) {
  require_same_shape(x, y, "ncc");
  return loss::ncc(model::to_tensor(x, torch::kFloat64), model::to_tensor(y, torch::kFloat64),
                   loss::NccMode::metric)
      .item<double>();
}

double boundary_edge(const Image& m, int row, int k) {
  const int c = 2 * k;
  double d = 0.0;
  const int weights[3] = {1, 2, 1};
  for (int dr = -1; dr <= 1; ++dr) {
    d += weights[dr + 1] * (m.clamped(row + dr, c + 1) - m.clamped(row + dr, c));
  }
  return std::abs(d) / 4.0;
}

VciResult vci_detail(const Image& interleaved, std::span<const std::uint8_t> vessel_mask,
                     const VciOptions& options) {
  if (interleaved.cols() % 2 != 0) fail(ErrorKind::shape_mismatch, "vci: width must be even");
  if (vessel_mask.size() != interleaved.size()) {
    fail(ErrorKind::shape_mismatch, "vci: vessel mask size differs from the image");
  }
  if (!(options.tau_max > 0.0)) fail(ErrorKind::invalid_argument, "vci: tau_max must be > 0");
  VciResult r;
  const int rows = interleaved.rows();
  const int cols = interleaved.cols();
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols / 2; ++k) {
      if (vessel_mask[static_cast<std::size_t>(i) * cols + 2 * k] == 0) continue;
      ++r.vessel_pixels;
      r.boundary_energy += boundary_edge(interleaved, i, k);
    }
  }
  if (r.vessel_pixels == 0) return r;
  r.raw = 1.0 - r.boundary_energy / (options.tau_max * static_cast<double>(r.vessel_pixels));
  r.value = std::clamp(r.raw, 0.0, 1.0);
  return r;
}

VciResult vci_detail(const Image& interleaved, const VciOptions& options) {
  std::vector<std::uint8_t> mask(interleaved.size());
  auto px = interleaved.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) mask[i] = px[i] > options.tau ? 1 : 0;
  return vci_detail(interleaved, mask, options);
}

double vci(const Image& interleaved, const VciOptions& options) {
  return vci_detail(interleaved, options).value;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd s;
  s.n = static_cast<std::int64_t>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  return s;
}

MeanStd interframe_ncc(std::span<const Image> frames) {
  if (frames.size() < 2) fail(ErrorKind::invalid_argument, "interframe_ncc: need at least 2 frames");
  std::vector<double> values;
  for (std::size_t i = 1; i < frames.size(); ++i) values.push_back(ncc(frames[i - 1], frames[i]));
  return mean_std(values);
}

Aggregate aggregate(std::span<const FrameMetrics> f) {
  Aggregate a;
  a.ssim = field_stats(f, &FrameMetrics::ssim);
  a.psnr_db = psnr_stats(f, &FrameMetrics::psnr_db);
  a.ncc = field_stats(f, &FrameMetrics::ncc);
  a.vci_before = field_stats(f, &FrameMetrics::vci_before);
  a.vci_after = field_stats(f, &FrameMetrics::vci_after);
  a.baseline_ssim = field_stats(f, &FrameMetrics::baseline_ssim);
  a.baseline_psnr_db = psnr_stats(f, &FrameMetrics::baseline_psnr_db);
  a.baseline_ncc = field_stats(f, &FrameMetrics::baseline_ncc);
  return a;
}

FrameMetrics frame_metrics(const data::Frame& frame, const Image& even_to_odd) {
  const Image& odd = frame.odd_half;
  require_same_shape(odd, even_to_odd, "frame_metrics");
  FrameMetrics m;
  m.frame_id = frame.frame_id;
  m.ssim = ssim(even_to_odd, odd);
  m.psnr_db = psnr(even_to_odd, odd);
  m.ncc = ncc(even_to_odd, odd);
  const auto before = vci_detail(frame.interleaved);
  const auto after = vci_detail(data::interleave(odd, even_to_odd));
  m.vci_before = before.value;
  m.vci_before_raw = before.raw;
  m.vci_after = after.value;
  m.vci_after_raw = after.raw;
  m.baseline_ssim = ssim(frame.even_half, odd);
  m.baseline_psnr_db = psnr(frame.even_half, odd);
  m.baseline_ncc = ncc(frame.even_half, odd);
  return m;
}

MetricsReport evaluate_dataset(std::span<const data::Frame> frames, const Registrar& registrar,
                               const std::string& method, const std::string& split) {
  MetricsReport report;
  report.method = method;
  report.split = split;
  for (const auto& frame : frames) report.per_frame.push_back(frame_metrics(frame, registrar(frame)));
  report.aggregate = aggregate(report.per_frame);
  return report;
}

MetricsReport evaluate_dataset(std::span<const data::Frame> frames, model::SasNet& net,
                               const std::string& method, const std::string& split) {
  std::vector<Image> odd;
  std::vector<Image> even;
  for (const auto& f : frames) {
    odd.push_back(f.odd_half);
    even.push_back(f.even_half);
  }
  const auto registered = model::register_halves(net, odd, even);
  MetricsReport report;
  report.method = method;
  report.split = split;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    report.per_frame.push_back(frame_metrics(frames[i], registered[i]));
  }
  report.aggregate = aggregate(report.per_frame);
  return report;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : r.per_frame) {
    frames.push_back({{"frame_id", f.frame_id},
                      {"ssim", f.ssim},
                      {"psnr_db", number_or_null(f.psnr_db)},
                      {"psnr_infinite", std::isinf(f.psnr_db)},
                      {"ncc", f.ncc},
                      {"vci_before", f.vci_before},
                      {"vci_after", f.vci_after},
                      {"vci_before_raw", f.vci_before_raw},
                      {"vci_after_raw", f.vci_after_raw},
                      {"baseline",
                       {{"ssim", f.baseline_ssim},
                        {"psnr_db", number_or_null(f.baseline_psnr_db)},
                        {"psnr_infinite", std::isinf(f.baseline_psnr_db)},
                        {"ncc", f.baseline_ncc}}}});
  }
  const auto& a = r.aggregate;
  nlohmann::json j = {{"schema_version", r.schema_version},
                      {"method", r.method},
                      {"split", r.split},
                      {"per_frame", frames},
                      {"aggregate",
                       {{"ssim", to_json(a.ssim)},
                        {"psnr_db", to_json(a.psnr_db)},
                        {"ncc", to_json(a.ncc)},
                        {"vci_before", to_json(a.vci_before)},
                        {"vci_after", to_json(a.vci_after)},
                        {"baseline_ssim", to_json(a.baseline_ssim)},
                        {"baseline_psnr_db", to_json(a.baseline_psnr_db)},
                        {"baseline_ncc", to_json(a.baseline_ncc)}}}};
  j["interframe_ncc"] = r.interframe_ncc ? to_json(*r.interframe_ncc) : nlohmann::json(nullptr);
  return j;
}

MetricsReport metrics_report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != MetricsReport::kSchemaVersion) {
      fail(ErrorKind::schema_mismatch,
           "metrics report schema_version " + std::to_string(r.schema_version));
    }
    r.method = j.at("method").get<std::string>();
    r.split = j.value("split", std::string("test"));
    for (const auto& f : j.at("per_frame")) {
      FrameMetrics m;
      m.frame_id = f.at("frame_id").get<std::string>();
      m.ssim = f.at("ssim").get<double>();
      m.psnr_db = psnr_from_json(f, "psnr_db");
      m.ncc = f.at("ncc").get<double>();
      m.vci_before = f.at("vci_before").get<double>();
      m.vci_after = f.at("vci_after").get<double>();
      m.vci_before_raw = f.value("vci_before_raw", m.vci_before);
      m.vci_after_raw = f.value("vci_after_raw", m.vci_after);
      const auto& b = f.at("baseline");
      m.baseline_ssim = b.at("ssim").get<double>();
      m.baseline_psnr_db = psnr_from_json(b, "psnr_db");
      m.baseline_ncc = b.at("ncc").get<double>();
      r.per_frame.push_back(std::move(m));
    }
    if (j.contains("interframe_ncc") && !j["interframe_ncc"].is_null()) {
      const auto& s = j["interframe_ncc"];
      r.interframe_ncc = MeanStd{s.at("mean").get<double>(), s.at("std").get<double>(),
                                 s.at("n").get<std::int64_t>()};
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::malformed_report, std::string("metrics report: ") + e.what());
  }
  r.aggregate = aggregate(r.per_frame);
  return r;
}

void write_metrics_report(const std::filesystem::path& path, const MetricsReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    out << to_json(report).dump(2) << '\n';
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

MetricsReport read_metrics_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::malformed_report, "metrics report " + path.string() + ": " + e.what());
  }
  return metrics_report_from_json(j);
}

}  // namespace sasreg::metrics
