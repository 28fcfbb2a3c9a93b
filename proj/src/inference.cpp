#include "sasreg/inference.hpp"

#include <algorithm>
#include <cstring>

#include "sasreg/error.hpp"

namespace sasreg::model {

torch::Tensor to_tensor(const Image& image, torch::Dtype dtype) {
  auto pixels = image.pixels();
  auto t = torch::from_blob(const_cast<double*>(pixels.data()), {1, 1, image.rows(), image.cols()},
                            torch::kFloat64);
  return t.to(dtype, /*non_blocking=*/false, /*copy=*/true);
}

torch::Tensor stack_images(std::span<const Image* const> images, torch::Dtype dtype) {
  if (images.empty()) fail(ErrorKind::invalid_argument, "stack_images: no images");
  std::vector<torch::Tensor> parts;
  parts.reserve(images.size());
  for (const Image* img : images) {
    if (!img->same_shape(*images.front())) {
      fail(ErrorKind::shape_mismatch, "stack_images: images differ in shape");
    }
    parts.push_back(to_tensor(*img, torch::kFloat64));
  }
  return torch::cat(parts, 0).to(dtype);
}

Image to_image(const torch::Tensor& tensor) {
  auto t = tensor.detach().to(torch::kCPU, torch::kFloat64).contiguous();
  while (t.dim() > 2) {
    if (t.size(0) != 1) fail(ErrorKind::shape_mismatch, "to_image: tensor holds several images");
    t = t.squeeze(0);
  }
  if (t.dim() != 2) fail(ErrorKind::shape_mismatch, "to_image: expected a 2-D image");
  Image out(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)));
  std::memcpy(out.pixels().data(), t.data_ptr<double>(), out.size() * sizeof(double));
  return out;
}

torch::Device device_of(SasNet& net) {
  auto params = net->parameters();
  return params.empty() ? torch::Device(torch::kCPU) : params.front().device();
}

std::vector<Image> register_halves(SasNet& net, std::span<const Image> odd,
                                   std::span<const Image> even, int batch_size) {
  if (odd.size() != even.size()) {
    fail(ErrorKind::invalid_argument, "register_halves: odd and even counts differ");
  }
  if (batch_size < 1) fail(ErrorKind::invalid_argument, "register_halves: batch_size < 1");
  std::vector<Image> out;
  out.reserve(odd.size());
  if (odd.empty()) return out;

  torch::NoGradGuard no_grad;
  const bool was_training = net->is_training();
  net->eval();
  const auto device = device_of(net);
  for (std::size_t start = 0; start < odd.size(); start += batch_size) {
    const std::size_t end = std::min(odd.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const Image*> o;
    std::vector<const Image*> e;
    for (std::size_t i = start; i < end; ++i) {
      if (!odd[i].same_shape(even[i])) {
        fail(ErrorKind::shape_mismatch, "register_halves: odd and even halves differ in shape");
      }
      o.push_back(&odd[i]);
      e.push_back(&even[i]);
    }
    auto to = stack_images(o).to(device);
    auto te = stack_images(e).to(device);
    const int64_t h = to.size(2);
    const int64_t w = to.size(3);
    auto [ph, pw] = padded_shape(h, w, net->config().levels);
    if (ph != h || pw != w) {
      namespace F = torch::nn::functional;
      auto pad = F::PadFuncOptions({0, pw - w, 0, ph - h}).mode(torch::kReplicate);
      to = F::pad(to, pad);
      te = F::pad(te, pad);
    }
    auto result = net->register_even(to, te).narrow(2, 0, h).narrow(3, 0, w);
    for (int64_t i = 0; i < result.size(0); ++i) out.push_back(to_image(result[i]));
  }
  if (was_training) net->train();
  return out;
}

Image register_half(SasNet& net, const Image& odd, const Image& even) {
  return register_halves(net, std::span(&odd, 1), std::span(&even, 1)).front();
}

}  // namespace sasreg::model
