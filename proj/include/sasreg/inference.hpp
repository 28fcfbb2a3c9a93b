#pragma once

#include <span>
#include <vector>

#include <torch/torch.h>

#include "sasreg/image.hpp"
#include "sasreg/model.hpp"

namespace sasreg::model {

/// [1,1,H,W] tensor holding the image.
torch::Tensor to_tensor(const Image& image, torch::Dtype dtype = torch::kFloat32);

/// [N,1,H,W] tensor; all images must share one shape.
torch::Tensor stack_images(std::span<const Image* const> images,
                           torch::Dtype dtype = torch::kFloat32);

/// Image from a [H,W], [1,H,W] or [1,1,H,W] tensor (any dtype or device).
Image to_image(const torch::Tensor& tensor);

/// Registration of half-image pairs: G(E_S(even), A_odd) per pair, run
/// without gradients in batches. Inputs whose size is not a multiple of
/// 2^levels are edge-padded and the output cropped back.
std::vector<Image> register_halves(SasNet& net, std::span<const Image> odd,
                                   std::span<const Image> even, int batch_size = 8);

Image register_half(SasNet& net, const Image& odd, const Image& even);

/// Device of the network's parameters.
torch::Device device_of(SasNet& net);

}  // namespace sasreg::model
