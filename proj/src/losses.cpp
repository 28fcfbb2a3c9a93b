#include "sasreg/losses.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <vector>

#include "sasreg/error.hpp"
#include "sasreg/log.hpp"

namespace sasreg::loss {
namespace {

// Variance below which an image is treated as constant by NCC.
constexpr double kConstantVariance = 1e-12;

int64_t sample_count(const torch::Tensor& x) { return x.dim() == 4 ? x.size(0) : 1; }

torch::Tensor flatten_samples(const torch::Tensor& x) {
  return x.reshape({sample_count(x), -1});
}

// [N*C, 1, H, W] view for depthwise windowed filtering.
torch::Tensor as_planes(const torch::Tensor& x) {
  TORCH_CHECK(x.dim() >= 2, "image tensor needs at least two dims");
  return x.reshape({-1, 1, x.size(-2), x.size(-1)});
}

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.sizes().equals(b.sizes())) {
    fail(ErrorKind::shape_mismatch, std::string(what) + ": inputs differ in shape");
  }
}

torch::Tensor gaussian_window(int size, double sigma, const torch::TensorOptions& options) {
  std::vector<double> g(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  auto g1 = torch::tensor(g, torch::kFloat64).to(options);
  return torch::outer(g1, g1).reshape({1, 1, size, size});
}

void warn_constant_ncc() {
  static std::atomic<int> warnings{0};
  const int n = warnings.fetch_add(1);
  if (n < 5) {
    log::warn("ncc: constant input; the sample's NCC term contributes 0");
  } else if (n == 5) {
    log::warn("ncc: further constant-input warnings suppressed");
  }
}

torch::Tensor mse(const torch::Tensor& a, const torch::Tensor& b) { return (a - b).pow(2).mean(); }

}  // namespace

void LossWeights::validate() const {
  for (double w : {scene, cycle, align, cos, ssim, ncc, grad}) {
    if (!std::isfinite(w) || w < 0.0) {
      fail(ErrorKind::invalid_argument, "loss weights must be finite and non-negative");
    }
  }
}

nlohmann::json to_json(const LossWeights& w) {
  return {{"lambda_scene", w.scene}, {"lambda_cycle", w.cycle}, {"lambda_align", w.align},
          {"lambda_cos", w.cos},     {"lambda_ssim", w.ssim},   {"lambda_ncc", w.ncc},
          {"lambda_grad", w.grad}};
}

LossWeights loss_weights_from_json(const nlohmann::json& j) {
  LossWeights w;
  w.scene = j.at("lambda_scene").get<double>();
  w.cycle = j.at("lambda_cycle").get<double>();
  w.align = j.at("lambda_align").get<double>();
  w.cos = j.at("lambda_cos").get<double>();
  w.ssim = j.at("lambda_ssim").get<double>();
  w.ncc = j.at("lambda_ncc").get<double>();
  w.grad = j.at("lambda_grad").get<double>();
  return w;
}

nlohmann::json to_json(const AblationFlags& a) {
  return {{"drop_scene", a.drop_scene},
          {"drop_cycle", a.drop_cycle},
          {"drop_align", a.drop_align},
          {"drop_appearance_encoder", a.drop_appearance_encoder}};
}

AblationFlags ablation_flags_from_json(const nlohmann::json& j) {
  AblationFlags a;
  a.drop_scene = j.value("drop_scene", false);
  a.drop_cycle = j.value("drop_cycle", false);
  a.drop_align = j.value("drop_align", false);
  a.drop_appearance_encoder = j.value("drop_appearance_encoder", false);
  return a;
}

LossWeights apply_ablation(LossWeights weights, const AblationFlags& flags) {
  if (flags.drop_scene) weights.scene = 0.0;
  if (flags.drop_cycle) weights.cycle = 0.0;
  if (flags.drop_align) weights.align = 0.0;
  return weights;
}

torch::Tensor ssim_per_sample(const torch::Tensor& x, const torch::Tensor& y,
                              const SsimOptions& options) {
  require_same_shape(x, y, "ssim");
  const int64_t n = sample_count(x);
  auto xp = as_planes(x);
  auto yp = as_planes(y);
  const int64_t fit = std::min<int64_t>({options.window, xp.size(2), xp.size(3)});
  const int window = static_cast<int>(fit % 2 == 1 ? fit : fit - 1);
  auto kernel = gaussian_window(window, options.sigma, xp.options());

  auto filt = [&](const torch::Tensor& t) { return torch::conv2d(t, kernel); };
  auto mu_x = filt(xp);
  auto mu_y = filt(yp);
  auto mu_xx = mu_x * mu_x;
  auto mu_yy = mu_y * mu_y;
  auto mu_xy = mu_x * mu_y;
  auto var_x = filt(xp * xp) - mu_xx;
  auto var_y = filt(yp * yp) - mu_yy;
  auto cov = filt(xp * yp) - mu_xy;
  auto map = ((2.0 * mu_xy + options.c1) * (2.0 * cov + options.c2)) /
             ((mu_xx + mu_yy + options.c1) * (var_x + var_y + options.c2));
  return map.reshape({n, -1}).mean(1);
}

torch::Tensor differentiable_ssim(const torch::Tensor& x, const torch::Tensor& y,
                                  const SsimOptions& options) {
  return ssim_per_sample(x, y, options).mean();
}

torch::Tensor ncc_per_sample(const torch::Tensor& x, const torch::Tensor& y, NccMode mode) {
  require_same_shape(x, y, "ncc");
  auto xs = flatten_samples(x);
  auto ys = flatten_samples(y);
  auto xc = xs - xs.mean(1, true);
  auto yc = ys - ys.mean(1, true);
  auto sxx = (xc * xc).sum(1);
  auto syy = (yc * yc).sum(1);
  auto sxy = (xc * yc).sum(1);
  const double threshold = kConstantVariance * static_cast<double>(xs.size(1));
  auto valid = (sxx > threshold).logical_and(syy > threshold);
  const bool all_valid = valid.all().item<bool>();
  if (!all_valid) {
    if (mode == NccMode::metric) fail(ErrorKind::invalid_argument, "ncc: constant input");
    warn_constant_ncc();
  }
  if (all_valid) return sxy / torch::sqrt(sxx * syy);
  // Keep the masked samples out of sqrt(0) so their gradient stays finite.
  auto safe = torch::where(valid, sxx * syy, torch::ones_like(sxx));
  return torch::where(valid, sxy / torch::sqrt(safe), torch::ones_like(sxy));
}

torch::Tensor ncc(const torch::Tensor& x, const torch::Tensor& y, NccMode mode) {
  return ncc_per_sample(x, y, mode).mean();
}

torch::Tensor cosine_per_sample(const torch::Tensor& a, const torch::Tensor& b) {
  require_same_shape(a, b, "cosine");
  auto as = flatten_samples(a);
  auto bs = flatten_samples(b);
  auto dot = (as * bs).sum(1);
  auto prod = (as * as).sum(1) * (bs * bs).sum(1);
  auto valid = prod > 0;
  if (valid.all().item<bool>()) return dot / torch::sqrt(prod);
  auto both_zero = as.abs().amax(1).eq(0).logical_and(bs.abs().amax(1).eq(0));
  auto fallback = both_zero.to(dot.dtype());
  auto safe = torch::where(valid, prod, torch::ones_like(prod));
  return torch::where(valid, dot / torch::sqrt(safe), fallback);
}

torch::Tensor gradient_matching(const torch::Tensor& a, const torch::Tensor& b) {
  require_same_shape(a, b, "gradient_matching");
  const int64_t h = a.size(-2);
  const int64_t w = a.size(-1);
  auto dx = [w](const torch::Tensor& t) { return t.narrow(-1, 1, w - 1) - t.narrow(-1, 0, w - 1); };
  auto dy = [h](const torch::Tensor& t) { return t.narrow(-2, 1, h - 1) - t.narrow(-2, 0, h - 1); };
  return (dx(a) - dx(b)).abs().mean() + (dy(a) - dy(b)).abs().mean();
}

SceneLossTerms scene_loss_terms(const torch::Tensor& scene_odd, const torch::Tensor& scene_even,
                                double lambda_cos) {
  require_same_shape(scene_odd, scene_even, "scene_loss");
  SceneLossTerms t;
  t.mse = mse(scene_odd, scene_even);
  t.cos = 1.0 - cosine_per_sample(scene_odd, scene_even).mean();
  t.value = t.mse + lambda_cos * t.cos;
  return t;
}

CycleLossTerms cycle_loss_terms(const torch::Tensor& odd, const torch::Tensor& even,
                                const torch::Tensor& odd_recon, const torch::Tensor& even_recon,
                                double lambda_ssim) {
  require_same_shape(odd, odd_recon, "cycle_loss");
  require_same_shape(even, even_recon, "cycle_loss");
  CycleLossTerms t;
  t.mse = mse(odd_recon, odd) + mse(even_recon, even);
  t.ssim = 2.0 - differentiable_ssim(odd_recon, odd) - differentiable_ssim(even_recon, even);
  t.value = t.mse + lambda_ssim * t.ssim;
  return t;
}

AlignLossTerms align_loss_terms(const torch::Tensor& even_to_odd, const torch::Tensor& odd,
                                double lambda_ncc, double lambda_grad) {
  require_same_shape(even_to_odd, odd, "align_loss");
  AlignLossTerms t;
  t.mse = mse(even_to_odd, odd);
  t.ncc = 1.0 - ncc(even_to_odd, odd, NccMode::loss);
  t.grad = gradient_matching(even_to_odd, odd);
  t.value = t.mse + lambda_ncc * t.ncc + lambda_grad * t.grad;
  return t;
}

torch::Tensor scene_loss(const torch::Tensor& scene_odd, const torch::Tensor& scene_even,
                         double lambda_cos) {
  return scene_loss_terms(scene_odd, scene_even, lambda_cos).value;
}

torch::Tensor cycle_loss(const torch::Tensor& odd, const torch::Tensor& even,
                         const torch::Tensor& odd_recon, const torch::Tensor& even_recon,
                         double lambda_ssim) {
  return cycle_loss_terms(odd, even, odd_recon, even_recon, lambda_ssim).value;
}

torch::Tensor align_loss(const torch::Tensor& even_to_odd, const torch::Tensor& odd,
                         double lambda_ncc, double lambda_grad) {
  return align_loss_terms(even_to_odd, odd, lambda_ncc, lambda_grad).value;
}

nlohmann::json to_json(const LossBreakdown& b) {
  return {{"scene", b.scene},
          {"cycle", b.cycle},
          {"align", b.align},
          {"total", b.total},
          {"scene_mse", b.scene_mse},
          {"scene_cos", b.scene_cos},
          {"cycle_mse", b.cycle_mse},
          {"cycle_ssim", b.cycle_ssim},
          {"align_mse", b.align_mse},
          {"align_ncc", b.align_ncc},
          {"align_grad", b.align_grad}};
}

LossBreakdown total_loss(double scene, double cycle, double align, const LossWeights& weights) {
  LossBreakdown b;
  b.scene = scene;
  b.cycle = cycle;
  b.align = align;
  b.weights = weights;
  b.total = weights.scene * scene + weights.cycle * cycle + weights.align * align;
  return b;
}

Objective total_loss(const SceneLossTerms& scene, const CycleLossTerms& cycle,
                     const AlignLossTerms& align, const LossWeights& weights) {
  auto value = [](const torch::Tensor& t) { return t.detach().item<double>(); };
  Objective out;
  out.breakdown = total_loss(value(scene.value), value(cycle.value), value(align.value), weights);
  out.breakdown.scene_mse = value(scene.mse);
  out.breakdown.scene_cos = value(scene.cos);
  out.breakdown.cycle_mse = value(cycle.mse);
  out.breakdown.cycle_ssim = value(cycle.ssim);
  out.breakdown.align_mse = value(align.mse);
  out.breakdown.align_ncc = value(align.ncc);
  out.breakdown.align_grad = value(align.grad);

  torch::Tensor total;
  auto add = [&](double w, const torch::Tensor& term) {
    if (w == 0.0) return;
    total = total.defined() ? total + w * term : w * term;
  };
  add(weights.scene, scene.value);
  add(weights.cycle, cycle.value);
  add(weights.align, align.value);
  out.total = total.defined() ? total : torch::zeros({}, scene.value.options());
  return out;
}

}  // namespace sasreg::loss
