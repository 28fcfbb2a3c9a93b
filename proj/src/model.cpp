#include "sasreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sasreg/error.hpp"

namespace sasreg::model {
namespace F = torch::nn::functional;

namespace {

constexpr double kLeakySlope = 0.2;

torch::nn::Conv2d conv3x3(int in_channels, int out_channels, int stride) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, out_channels, 3)
                               .stride(stride)
                               .padding(1)
                               .padding_mode(torch::kReflect));
}

torch::Tensor leaky(const torch::Tensor& x) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(kLeakySlope));
}

torch::Tensor upsample2x(const torch::Tensor& x) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .scale_factor(std::vector<double>{2.0, 2.0})
                               .mode(torch::kNearest));
}

// Channel width at a given depth: base, 2*base, 4*base, ... capped at the
// deepest level so the bottleneck keeps the last encoder width.
int width_at(int base, int level, int levels) {
  return base << std::min(level, levels - 1);
}

}  // namespace

torch::Tensor instance_norm(const torch::Tensor& x, double eps) {
  TORCH_CHECK(x.dim() == 3 || x.dim() == 4, "instance_norm expects [C,H,W] or [N,C,H,W]");
  // Fused kernel; same statistics as (x - mean) / sqrt(biased_var + eps).
  const bool batched = x.dim() == 4;
  auto y = torch::instance_norm(batched ? x : x.unsqueeze(0), {}, {}, {}, {},
                                /*use_input_stats=*/true, /*momentum=*/0.0, eps,
                                /*cudnn_enabled=*/false);
  return batched ? y : y.squeeze(0);
}

torch::Tensor global_average_pool(const torch::Tensor& x) {
  TORCH_CHECK(x.dim() == 4, "global_average_pool expects [N,C,H,W]");
  return x.mean({-2, -1});
}

std::pair<int64_t, int64_t> padded_shape(int64_t height, int64_t width, int levels) {
  const int64_t step = int64_t{1} << levels;
  return {(height + step - 1) / step * step, (width + step - 1) / step * step};
}

ConvNormActImpl::ConvNormActImpl(int in_channels, int out_channels, int stride, double eps)
    : conv_(register_module("conv", conv3x3(in_channels, out_channels, stride))), eps_(eps) {}

torch::Tensor ConvNormActImpl::forward(const torch::Tensor& x) {
  return leaky(instance_norm(conv_(x), eps_));
}

ModulatorImpl::ModulatorImpl(int channels, int code_dim, double eps)
    : affine_(register_module("affine", torch::nn::Linear(code_dim, 2 * channels))),
      channels_(channels),
      eps_(eps) {}

std::pair<torch::Tensor, torch::Tensor> ModulatorImpl::scale_shift(const torch::Tensor& code) {
  auto params = affine_(code);
  return {params.narrow(1, 0, channels_), params.narrow(1, channels_, channels_)};
}

torch::Tensor ModulatorImpl::forward(const torch::Tensor& x, const torch::Tensor& code) {
  auto [gamma, beta] = scale_shift(code);
  return gamma.unsqueeze(-1).unsqueeze(-1) * instance_norm(x, eps_) +
         beta.unsqueeze(-1).unsqueeze(-1);
}

ModulatedConvImpl::ModulatedConvImpl(int in_channels, int out_channels, int stride,
                                     int code_dim, double eps)
    : conv_(register_module("conv", conv3x3(in_channels, out_channels, stride))),
      modulator_(register_module("modulator", Modulator(out_channels, code_dim, eps))) {}

torch::Tensor ModulatedConvImpl::forward(const torch::Tensor& x, const torch::Tensor& code) {
  return leaky(modulator_(conv_(x), code));
}

SceneEncoderImpl::SceneEncoderImpl(const ModelConfig& c) : levels_(c.levels) {
  encoder_ = register_module("encoder", torch::nn::ModuleList());
  decoder_ = register_module("decoder", torch::nn::ModuleList());
  const int L = c.levels;
  for (int l = 0; l <= L; ++l) {
    const int in = l == 0 ? 1 : width_at(c.scene_base, l - 1, L);
    const int out = width_at(c.scene_base, l, L);
    encoder_->push_back(ConvNormAct(in, out, l == 0 ? 1 : 2, c.norm_eps));
    encoder_->push_back(ConvNormAct(out, out, 1, c.norm_eps));
  }
  const int deepest = width_at(c.scene_base, L, L);
  bottleneck_ = register_module("bottleneck", ConvNormAct(deepest, deepest, 1, c.norm_eps));
  for (int l = L - 1; l >= 0; --l) {
    const int below = width_at(c.scene_base, l + 1, L);
    const int here = width_at(c.scene_base, l, L);
    decoder_->push_back(ConvNormAct(below, here, 1, c.norm_eps));
    decoder_->push_back(ConvNormAct(2 * here, here, 1, c.norm_eps));
    decoder_->push_back(ConvNormAct(here, here, 1, c.norm_eps));
  }
  project_ = register_module(
      "project", torch::nn::Conv2d(torch::nn::Conv2dOptions(c.scene_base, c.scene_channels, 1)));
}

torch::Tensor SceneEncoderImpl::forward(const torch::Tensor& image) {
  std::vector<torch::Tensor> skips;
  torch::Tensor x = image;
  for (int l = 0; l <= levels_; ++l) {
    x = encoder_->ptr<ConvNormActImpl>(2 * l)->forward(x);
    x = encoder_->ptr<ConvNormActImpl>(2 * l + 1)->forward(x);
    if (l < levels_) skips.push_back(x);
  }
  x = bottleneck_(x);
  for (int i = 0; i < levels_; ++i) {
    const int l = levels_ - 1 - i;
    x = decoder_->ptr<ConvNormActImpl>(3 * i)->forward(upsample2x(x));
    x = decoder_->ptr<ConvNormActImpl>(3 * i + 1)->forward(torch::cat({x, skips[l]}, 1));
    x = decoder_->ptr<ConvNormActImpl>(3 * i + 2)->forward(x);
  }
  return project_(x);
}

AppearanceEncoderImpl::AppearanceEncoderImpl(const ModelConfig& c) {
  convs_ = register_module("convs", torch::nn::ModuleList());
  int in = 1;
  int width = c.appearance_base;
  for (int l = 0; l < 3; ++l) {
    convs_->push_back(conv3x3(in, width, 2));
    in = width;
    width *= 2;
  }
  head_ = register_module("head", torch::nn::Linear(in, c.code_dim));
}

torch::Tensor AppearanceEncoderImpl::forward(const torch::Tensor& image) {
  torch::Tensor x = image;
  for (const auto& m : *convs_) x = leaky(m->as<torch::nn::Conv2dImpl>()->forward(x));
  return head_(global_average_pool(x));
}

ForwardModelImpl::ForwardModelImpl(const ModelConfig& c) : levels_(c.levels) {
  encoder_ = register_module("encoder", torch::nn::ModuleList());
  decoder_ = register_module("decoder", torch::nn::ModuleList());
  const int L = c.levels;
  const int A = c.code_dim;
  for (int l = 0; l <= L; ++l) {
    const int in = l == 0 ? c.scene_channels : width_at(c.scene_base, l - 1, L);
    const int out = width_at(c.scene_base, l, L);
    encoder_->push_back(ModulatedConv(in, out, l == 0 ? 1 : 2, A, c.norm_eps));
    encoder_->push_back(ModulatedConv(out, out, 1, A, c.norm_eps));
  }
  const int deepest = width_at(c.scene_base, L, L);
  bottleneck_ = register_module("bottleneck", ModulatedConv(deepest, deepest, 1, A, c.norm_eps));
  for (int l = L - 1; l >= 0; --l) {
    const int below = width_at(c.scene_base, l + 1, L);
    const int here = width_at(c.scene_base, l, L);
    decoder_->push_back(ModulatedConv(below, here, 1, A, c.norm_eps));
    decoder_->push_back(ModulatedConv(2 * here, here, 1, A, c.norm_eps));
    decoder_->push_back(ModulatedConv(here, here, 1, A, c.norm_eps));
  }
  output_ = register_module("output",
                            torch::nn::Conv2d(torch::nn::Conv2dOptions(c.scene_base, 1, 1)));
}

torch::Tensor ForwardModelImpl::forward(const torch::Tensor& scene, const torch::Tensor& code) {
  std::vector<torch::Tensor> skips;
  torch::Tensor x = scene;
  for (int l = 0; l <= levels_; ++l) {
    x = encoder_->ptr<ModulatedConvImpl>(2 * l)->forward(x, code);
    x = encoder_->ptr<ModulatedConvImpl>(2 * l + 1)->forward(x, code);
    if (l < levels_) skips.push_back(x);
  }
  x = bottleneck_(x, code);
  for (int i = 0; i < levels_; ++i) {
    const int l = levels_ - 1 - i;
    x = decoder_->ptr<ModulatedConvImpl>(3 * i)->forward(upsample2x(x), code);
    x = decoder_->ptr<ModulatedConvImpl>(3 * i + 1)->forward(torch::cat({x, skips[l]}, 1), code);
    x = decoder_->ptr<ModulatedConvImpl>(3 * i + 2)->forward(x, code);
  }
  return torch::sigmoid(output_(x));
}

SasNetImpl::SasNetImpl(const ModelConfig& config) : config_(config) {
  if (config.levels < 1 || config.scene_base < 1 || config.appearance_base < 1 ||
      config.scene_channels < 1 || config.code_dim < 1 || !(config.norm_eps > 0.0)) {
    fail(ErrorKind::invalid_argument, "invalid model configuration");
  }
  scene_encoder_ = register_module("scene_encoder", SceneEncoder(config));
  appearance_encoder_ = register_module("appearance_encoder", AppearanceEncoder(config));
  forward_model_ = register_module("forward_model", ForwardModel(config));
  if (config.learned_domain_codes) {
    domain_codes_ = register_parameter("domain_codes", torch::zeros({2, config.code_dim}));
  }
  initialize_weights(*this);
}

void SasNetImpl::check_input(const torch::Tensor& image, const char* what) const {
  if (image.dim() != 4 || image.size(1) != 1) {
    fail(ErrorKind::shape_mismatch, std::string(what) + ": expected [N,1,H,W] input");
  }
  const int64_t h = image.size(2);
  const int64_t w = image.size(3);
  const int64_t step = int64_t{1} << config_.levels;
  if (h % step != 0 || w % step != 0) {
    auto [ph, pw] = padded_shape(h, w, config_.levels);
    fail(ErrorKind::shape_mismatch,
         std::string(what) + ": " + std::to_string(h) + "x" + std::to_string(w) +
             " is not divisible by " + std::to_string(step) + "; pad the input to " +
             std::to_string(ph) + "x" + std::to_string(pw));
  }
}

torch::Tensor SasNetImpl::encode_scene(const torch::Tensor& image) {
  check_input(image, "scene_encode");
  return scene_encoder_(image);
}

torch::Tensor SasNetImpl::encode_appearance(const torch::Tensor& image) {
  if (image.dim() != 4 || image.size(1) != 1 || image.size(2) < 16 || image.size(3) < 16) {
    fail(ErrorKind::shape_mismatch, "appearance_encode: expected [N,1,H>=16,W>=16] input");
  }
  return appearance_encoder_(image);
}

torch::Tensor SasNetImpl::synthesize(const torch::Tensor& scene, const torch::Tensor& code) {
  const int64_t step = int64_t{1} << config_.levels;
  if (scene.dim() != 4 || scene.size(1) != config_.scene_channels || scene.size(2) % step != 0 ||
      scene.size(3) % step != 0) {
    fail(ErrorKind::shape_mismatch, "synthesize: scene map has an invalid shape");
  }
  if (code.dim() != 2 || code.size(0) != scene.size(0) || code.size(1) != config_.code_dim) {
    fail(ErrorKind::shape_mismatch, "synthesize: code must be [N, C_A]");
  }
  return forward_model_(scene, code);
}

std::pair<torch::Tensor, torch::Tensor> SasNetImpl::codes(const torch::Tensor& odd,
                                                          const torch::Tensor& even) {
  if (config_.learned_domain_codes) {
    return {domain_codes_[0].unsqueeze(0).expand({odd.size(0), -1}),
            domain_codes_[1].unsqueeze(0).expand({even.size(0), -1})};
  }
  const int64_t n = odd.size(0);
  auto both = encode_appearance(torch::cat({odd, even}, 0));
  return {both.narrow(0, 0, n), both.narrow(0, n, n)};
}

CrossRender SasNetImpl::cross_render(const torch::Tensor& odd, const torch::Tensor& even) {
  if (!odd.sizes().equals(even.sizes())) {
    fail(ErrorKind::shape_mismatch, "cross_render: odd and even inputs differ in shape");
  }
  check_input(odd, "cross_render");
  const int64_t n = odd.size(0);
  CrossRender out;
  auto scenes = scene_encoder_(torch::cat({odd, even}, 0));
  out.scene_odd = scenes.narrow(0, 0, n);
  out.scene_even = scenes.narrow(0, n, n);
  std::tie(out.code_odd, out.code_even) = codes(odd, even);
  auto rendered = forward_model_(torch::cat({out.scene_even, out.scene_odd}, 0),
                                 torch::cat({out.code_odd, out.code_even}, 0));
  out.even_to_odd = rendered.narrow(0, 0, n);
  out.odd_to_even = rendered.narrow(0, n, n);
  return out;
}

TrainingPass SasNetImpl::training_pass(const torch::Tensor& odd, const torch::Tensor& even) {
  if (!odd.sizes().equals(even.sizes())) {
    fail(ErrorKind::shape_mismatch, "training_pass: odd and even inputs differ in shape");
  }
  check_input(odd, "training_pass");
  const int64_t n = odd.size(0);
  TrainingPass out;
  auto scenes = scene_encoder_(torch::cat({odd, even}, 0));
  out.scene_odd = scenes.narrow(0, 0, n);
  out.scene_even = scenes.narrow(0, n, n);
  auto [code_odd, code_even] = codes(odd, even);
  // One batched synthesis: self(odd), self(even), even->odd.
  auto rendered = forward_model_(torch::cat({out.scene_odd, out.scene_even, out.scene_even}, 0),
                                 torch::cat({code_odd, code_even, code_odd}, 0));
  out.self_odd = rendered.narrow(0, 0, n);
  out.self_even = rendered.narrow(0, n, n);
  out.even_to_odd = rendered.narrow(0, 2 * n, n);
  return out;
}

torch::Tensor SasNetImpl::register_even(const torch::Tensor& odd, const torch::Tensor& even) {
  if (!odd.sizes().equals(even.sizes())) {
    fail(ErrorKind::shape_mismatch, "register_even: odd and even inputs differ in shape");
  }
  check_input(even, "register_even");
  torch::Tensor code_odd;
  if (config_.learned_domain_codes) {
    code_odd = domain_codes_[0].unsqueeze(0).expand({odd.size(0), -1});
  } else {
    code_odd = encode_appearance(odd);
  }
  return forward_model_(scene_encoder_(even), code_odd);
}

int64_t parameter_count(const torch::nn::Module& module) {
  int64_t total = 0;
  for (const auto& p : module.parameters()) total += p.numel();
  return total;
}

void initialize_weights(SasNetImpl& net) {
  torch::NoGradGuard no_grad;
  for (auto& m : net.modules(/*include_self=*/false)) {
    if (auto* conv = m->as<torch::nn::Conv2dImpl>()) {
      torch::nn::init::kaiming_normal_(conv->weight, kLeakySlope, torch::kFanIn,
                                       torch::kLeakyReLU);
      if (conv->bias.defined()) conv->bias.zero_();
    } else if (auto* lin = m->as<torch::nn::LinearImpl>()) {
      torch::nn::init::kaiming_normal_(lin->weight, 1.0, torch::kFanIn, torch::kLinear);
      lin->bias.zero_();
    }
  }
  // Modulators own a Linear child; override it so gamma starts at 1 and beta at 0.
  for (auto& m : net.modules(/*include_self=*/false)) {
    if (auto* mod = m->as<ModulatorImpl>()) {
      auto& lin = mod->affine();
      lin->weight.normal_(0.0, 0.01);
      lin->bias.zero_();
      lin->bias.narrow(0, 0, mod->channels()).fill_(1.0);
    }
  }
  for (auto& item : net.named_parameters(/*recurse=*/false)) {
    if (item.key() == "domain_codes") item.value().normal_(0.0, 1.0);
  }
}

}  // namespace sasreg::model
