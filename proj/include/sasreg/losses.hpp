#pragma once

#include <json.hpp>
#include <torch/torch.h>

// Training objectives. Image arguments are either a single image ([H,W] or
// any tensor without a batch axis) or a batch shaped [N,C,H,W]; per-sample
// quantities (cosine, NCC, SSIM) are averaged over the batch.
namespace sasreg::loss {

struct LossWeights {
  double scene = 1.0;
  double cycle = 0.5;
  double align = 2.0;
  double cos = 0.1;
  double ssim = 0.5;
  double ncc = 0.5;
  double grad = 0.3;

  /// Throws ErrorKind::invalid_argument if any weight is negative or not finite.
  void validate() const;

  bool operator==(const LossWeights&) const = default;
};

nlohmann::json to_json(const LossWeights& w);
LossWeights loss_weights_from_json(const nlohmann::json& j);

struct AblationFlags {
  bool drop_scene = false;
  bool drop_cycle = false;
  bool drop_align = false;
  bool drop_appearance_encoder = false;

  bool operator==(const AblationFlags&) const = default;
};

nlohmann::json to_json(const AblationFlags& a);
AblationFlags ablation_flags_from_json(const nlohmann::json& j);

/// Weights with the dropped components' lambdas set to zero.
LossWeights apply_ablation(LossWeights weights, const AblationFlags& flags);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
};

/// Gaussian-windowed SSIM averaged over valid window positions. Images
/// smaller than the window use the largest odd window that fits.
/// Returns one value per sample, shape [N].
torch::Tensor ssim_per_sample(const torch::Tensor& x, const torch::Tensor& y,
                              const SsimOptions& options = {});

/// Batch mean of ssim_per_sample.
torch::Tensor differentiable_ssim(const torch::Tensor& x, const torch::Tensor& y,
                                  const SsimOptions& options = {});

enum class NccMode {
  metric,  // constant input is an error
  loss,    // constant input yields NCC = 1 (no contribution) and a warning
};

/// Global zero-mean normalized cross-correlation, one value per sample.
torch::Tensor ncc_per_sample(const torch::Tensor& x, const torch::Tensor& y,
                             NccMode mode = NccMode::metric);

torch::Tensor ncc(const torch::Tensor& x, const torch::Tensor& y,
                  NccMode mode = NccMode::metric);

/// Cosine similarity of the flattened maps per sample; two all-zero maps
/// have cosine 1.
torch::Tensor cosine_per_sample(const torch::Tensor& a, const torch::Tensor& b);

/// mean|dx(a) - dx(b)| + mean|dy(a) - dy(b)| with forward differences over
/// the valid region (dx along columns, dy along rows).
torch::Tensor gradient_matching(const torch::Tensor& a, const torch::Tensor& b);

struct SceneLossTerms {
  torch::Tensor mse;
  torch::Tensor cos;  // 1 - cosine
  torch::Tensor value;
};

struct CycleLossTerms {
  torch::Tensor mse;   // MSE_odd + MSE_even
  torch::Tensor ssim;  // 2 - SSIM_odd - SSIM_even
  torch::Tensor value;
};

struct AlignLossTerms {
  torch::Tensor mse;
  torch::Tensor ncc;  // 1 - NCC
  torch::Tensor grad;
  torch::Tensor value;
};

SceneLossTerms scene_loss_terms(const torch::Tensor& scene_odd, const torch::Tensor& scene_even,
                                double lambda_cos);
CycleLossTerms cycle_loss_terms(const torch::Tensor& odd, const torch::Tensor& even,
                                const torch::Tensor& odd_recon, const torch::Tensor& even_recon,
                                double lambda_ssim);
AlignLossTerms align_loss_terms(const torch::Tensor& even_to_odd, const torch::Tensor& odd,
                                double lambda_ncc, double lambda_grad);

torch::Tensor scene_loss(const torch::Tensor& scene_odd, const torch::Tensor& scene_even,
                         double lambda_cos);
torch::Tensor cycle_loss(const torch::Tensor& odd, const torch::Tensor& even,
                         const torch::Tensor& odd_recon, const torch::Tensor& even_recon,
                         double lambda_ssim);
torch::Tensor align_loss(const torch::Tensor& even_to_odd, const torch::Tensor& odd,
                         double lambda_ncc, double lambda_grad);

/// Scalar audit record of one objective evaluation.
struct LossBreakdown {
  double scene = 0.0;
  double cycle = 0.0;
  double align = 0.0;
  double total = 0.0;
  double scene_mse = 0.0;
  double scene_cos = 0.0;
  double cycle_mse = 0.0;
  double cycle_ssim = 0.0;
  double align_mse = 0.0;
  double align_ncc = 0.0;
  double align_grad = 0.0;
  LossWeights weights;
};

nlohmann::json to_json(const LossBreakdown& b);

/// Weighted sum in double precision: scene*l_scene + cycle*l_cycle + align*l_align.
LossBreakdown total_loss(double scene, double cycle, double align, const LossWeights& weights);

struct Objective {
  torch::Tensor total;  // differentiable weighted sum
  LossBreakdown breakdown;
};

/// Combines the three component terms. Components whose lambda is zero are
/// still reported in the breakdown but are detached from the graph.
Objective total_loss(const SceneLossTerms& scene, const CycleLossTerms& cycle,
                     const AlignLossTerms& align, const LossWeights& weights);

}  // namespace sasreg::loss
