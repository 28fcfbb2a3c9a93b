#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sasreg/dataset_io.hpp"
#include "sasreg/image.hpp"
#include "sasreg/losses.hpp"
#include "sasreg/model.hpp"

namespace sasreg::metrics {

/// 10*log10(peak^2 / MSE); identical images give +infinity.
double psnr(const Image& x, const Image& y, double peak = 1.0);

/// Gaussian-windowed SSIM in double precision (same kernel as the loss).
double ssim(const Image& x, const Image& y, const loss::SsimOptions& options = {});

/// Global NCC in double precision; constant input is an invalid-argument error.
double ncc(const Image& x, const Image& y);

struct VciOptions {
  double tau = 0.05;      // vessel threshold on intensity
  double tau_max = 0.3;   // normalization of the mean boundary edge energy
};

struct VciResult {
  double value = 1.0;  // clamped to [0,1]
  double raw = 1.0;    // before clamping
  std::int64_t vessel_pixels = 0;  // vessel pixels on boundary columns
  double boundary_energy = 0.0;  // sum of e over vessel pixels on boundary columns
};

/// Vascular continuity of an interleaved frame. The edge response at
/// 0-based column 2k is |[1,2,1]^T smoothed (m(:,2k+1) - m(:,2k))| / 4, the
/// horizontal Sobel centred on the boundary between an odd-direction
/// column and the even-direction column to its right; e lies in [0,1] for
/// unit-range images. Vessel pixels are m > tau. No vessel pixels gives 1.
VciResult vci_detail(const Image& interleaved, const VciOptions& options = {});

/// Same, but with a caller-supplied vessel mask (row-major, nonzero = vessel).
VciResult vci_detail(const Image& interleaved, std::span<const std::uint8_t> vessel_mask,
                     const VciOptions& options = {});

double vci(const Image& interleaved, const VciOptions& options = {});

/// Boundary edge response e at (row, 2k); exposed for diagnostics and tests.
double boundary_edge(const Image& interleaved, int row, int k);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample (n-1) convention; 0 when n < 2
  std::int64_t n = 0;
};

MeanStd mean_std(std::span<const double> values);

/// NCC of each consecutive pair; needs at least two equally shaped frames.
MeanStd interframe_ncc(std::span<const Image> frames);

struct FrameMetrics {
  std::string frame_id;
  double ssim = 0.0;
  double psnr_db = 0.0;  // may be +infinity
  double ncc = 0.0;
  double vci_before = 0.0;
  double vci_after = 0.0;
  double vci_before_raw = 0.0;
  double vci_after_raw = 0.0;
  // Unregistered baseline: the even half compared directly with the odd half.
  double baseline_ssim = 0.0;
  double baseline_psnr_db = 0.0;
  double baseline_ncc = 0.0;
};

struct PsnrStats {
  MeanStd finite;  // over finite values only
  std::int64_t infinite = 0;
};

struct Aggregate {
  MeanStd ssim;
  PsnrStats psnr_db;
  MeanStd ncc;
  MeanStd vci_before;
  MeanStd vci_after;
  MeanStd baseline_ssim;
  PsnrStats baseline_psnr_db;
  MeanStd baseline_ncc;
};

struct MetricsReport {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  std::string method = "sasreg";
  std::string split = "test";
  std::vector<FrameMetrics> per_frame;
  Aggregate aggregate;
  std::optional<MeanStd> interframe_ncc;
};

Aggregate aggregate(std::span<const FrameMetrics> per_frame);

FrameMetrics frame_metrics(const data::Frame& frame, const Image& even_to_odd);

/// Registered even half for one frame (I_even_to_odd).
using Registrar = std::function<Image(const data::Frame&)>;

MetricsReport evaluate_dataset(std::span<const data::Frame> frames, const Registrar& registrar,
                               const std::string& method = "sasreg",
                               const std::string& split = "test");

MetricsReport evaluate_dataset(std::span<const data::Frame> frames, model::SasNet& net,
                               const std::string& method = "sasreg",
                               const std::string& split = "test");

nlohmann::json to_json(const MetricsReport& report);
/// Throws ErrorKind::malformed_report on missing/ill-typed fields and
/// ErrorKind::schema_mismatch on an unknown schema_version.
MetricsReport metrics_report_from_json(const nlohmann::json& j);

void write_metrics_report(const std::filesystem::path& path, const MetricsReport& report);
MetricsReport read_metrics_report(const std::filesystem::path& path);

}  // namespace sasreg::metrics
