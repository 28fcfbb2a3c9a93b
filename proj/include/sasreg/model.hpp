#pragma once

#include <cstdint>
#include <utility>

#include <torch/torch.h>

// Scene-appearance separation network.
//
//   S = E_S(I)   C_S x H x W structure map (U-Net, instance-normalized)
//   A = E_A(I)   C_A acquisition code (conv stack + global average pooling)
//   I' = G(S, A) forward model; every block is conv -> Modulate -> LeakyReLU
//
// All images are single-channel half images (one scan direction) shaped
// [N, 1, H, W] with H and W divisible by 2^levels.
namespace sasreg::model {

struct ModelConfig {
  int scene_channels = 64;   // C_S
  int code_dim = 32;         // C_A
  int scene_base = 32;       // first-level width of E_S and G
  int appearance_base = 16;  // first-level width of E_A
  int levels = 3;            // 2x downsamplings in E_S / G
  double norm_eps = 1e-6;
  // Ablation "without appearance encoder": A is replaced by one learned
  // constant code per scan direction.
  bool learned_domain_codes = false;

  bool operator==(const ModelConfig&) const = default;
};

/// (x - mean) / sqrt(biased_var + eps) over the spatial dims of each
/// channel of each sample. Accepts [N,C,H,W] or [C,H,W].
torch::Tensor instance_norm(const torch::Tensor& x, double eps);

/// Mean over the spatial dims: [N,C,H,W] -> [N,C].
torch::Tensor global_average_pool(const torch::Tensor& x);

/// Smallest (H', W') >= (H, W) accepted by a network with `levels` levels.
std::pair<int64_t, int64_t> padded_shape(int64_t height, int64_t width, int levels);

/// conv3x3 (reflect padding) -> instance_norm -> LeakyReLU(0.2).
class ConvNormActImpl : public torch::nn::Module {
 public:
  ConvNormActImpl(int in_channels, int out_channels, int stride, double eps);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv_{nullptr};
  double eps_;
};
TORCH_MODULE(ConvNormAct);

/// Imaging response modulator: gamma(A) * IN(x) + beta(A), with gamma and
/// beta affine in the code A and broadcast over space.
class ModulatorImpl : public torch::nn::Module {
 public:
  ModulatorImpl(int channels, int code_dim, double eps);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& code);

  /// [N, C] scale and shift for a batch of codes.
  std::pair<torch::Tensor, torch::Tensor> scale_shift(const torch::Tensor& code);

  torch::nn::Linear& affine() { return affine_; }
  int channels() const { return channels_; }

 private:
  torch::nn::Linear affine_{nullptr};
  int channels_;
  double eps_;
};
TORCH_MODULE(Modulator);

/// conv3x3 (reflect padding) -> Modulate(., A) -> LeakyReLU(0.2).
class ModulatedConvImpl : public torch::nn::Module {
 public:
  ModulatedConvImpl(int in_channels, int out_channels, int stride, int code_dim, double eps);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& code);

 private:
  torch::nn::Conv2d conv_{nullptr};
  Modulator modulator_{nullptr};
};
TORCH_MODULE(ModulatedConv);

class SceneEncoderImpl : public torch::nn::Module {
 public:
  explicit SceneEncoderImpl(const ModelConfig& config);
  torch::Tensor forward(const torch::Tensor& image);

 private:
  int levels_;
  torch::nn::ModuleList encoder_;  // per level: [down/stem conv, refine conv]
  ConvNormAct bottleneck_{nullptr};
  torch::nn::ModuleList decoder_;  // per level: [up conv, fuse conv, refine conv]
  torch::nn::Conv2d project_{nullptr};
};
TORCH_MODULE(SceneEncoder);

class AppearanceEncoderImpl : public torch::nn::Module {
 public:
  explicit AppearanceEncoderImpl(const ModelConfig& config);
  torch::Tensor forward(const torch::Tensor& image);

 private:
  torch::nn::ModuleList convs_;
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(AppearanceEncoder);

class ForwardModelImpl : public torch::nn::Module {
 public:
  explicit ForwardModelImpl(const ModelConfig& config);
  torch::Tensor forward(const torch::Tensor& scene, const torch::Tensor& code);

 private:
  int levels_;
  torch::nn::ModuleList encoder_;
  ModulatedConv bottleneck_{nullptr};
  torch::nn::ModuleList decoder_;
  torch::nn::Conv2d output_{nullptr};
};
TORCH_MODULE(ForwardModel);

/// All artifacts of one bidirectional cross-domain rendering pass.
struct CrossRender {
  torch::Tensor even_to_odd;  // G(S_even, A_odd), the registration output
  torch::Tensor odd_to_even;  // G(S_odd, A_even)
  torch::Tensor scene_odd;
  torch::Tensor scene_even;
  torch::Tensor code_odd;
  torch::Tensor code_even;
};

/// What the training objective consumes; odd_to_even is not needed by any
/// loss term and is skipped.
struct TrainingPass {
  torch::Tensor scene_odd;
  torch::Tensor scene_even;
  torch::Tensor self_odd;     // G(S_odd, A_odd)
  torch::Tensor self_even;    // G(S_even, A_even)
  torch::Tensor even_to_odd;  // G(S_even, A_odd)
};

class SasNetImpl : public torch::nn::Module {
 public:
  explicit SasNetImpl(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  torch::Tensor encode_scene(const torch::Tensor& image);
  torch::Tensor encode_appearance(const torch::Tensor& image);
  torch::Tensor synthesize(const torch::Tensor& scene, const torch::Tensor& code);

  /// Codes for both directions; with learned_domain_codes the images are
  /// ignored and the two learned constants are broadcast to the batch.
  std::pair<torch::Tensor, torch::Tensor> codes(const torch::Tensor& odd,
                                                const torch::Tensor& even);

  CrossRender cross_render(const torch::Tensor& odd, const torch::Tensor& even);
  TrainingPass training_pass(const torch::Tensor& odd, const torch::Tensor& even);

  /// Registration only: G(E_S(even), A_odd).
  torch::Tensor register_even(const torch::Tensor& odd, const torch::Tensor& even);

  SceneEncoder& scene_encoder() { return scene_encoder_; }
  AppearanceEncoder& appearance_encoder() { return appearance_encoder_; }
  ForwardModel& forward_model() { return forward_model_; }

 private:
  void check_input(const torch::Tensor& image, const char* what) const;

  ModelConfig config_;
  SceneEncoder scene_encoder_{nullptr};
  AppearanceEncoder appearance_encoder_{nullptr};
  ForwardModel forward_model_{nullptr};
  torch::Tensor domain_codes_;  // [2, C_A], only with learned_domain_codes
};
TORCH_MODULE(SasNet);

int64_t parameter_count(const torch::nn::Module& module);

/// Zero-mean Gaussian (fan-in scaled) conv init; modulators start at
/// gamma = 1, beta = 0. Draws from the global torch generator.
void initialize_weights(SasNetImpl& net);

}  // namespace sasreg::model
