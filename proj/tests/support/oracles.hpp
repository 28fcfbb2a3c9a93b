#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <torch/torch.h>

// Reference implementations shared by the unit and acceptance tests.
namespace oracle {

using Tensor = torch::Tensor;

// Brute-force Gaussian SSIM over valid window positions, independent of the
// convolution-based implementation.
inline double ssim_oracle(const Tensor& xt, const Tensor& yt, int window = 11, double sigma = 1.5) {
  const int64_t h = xt.size(-2);
  const int64_t w = xt.size(-1);
  int win = std::min<int64_t>(window, std::min(h, w));
  if (win % 2 == 0) --win;
  const auto xc = xt.reshape({h, w}).contiguous();
  const auto yc = yt.reshape({h, w}).contiguous();
  auto x = xc.accessor<double, 2>();
  auto y = yc.accessor<double, 2>();
  std::vector<double> g(win);
  double gs = 0.0;
  for (int i = 0; i < win; ++i) {
    const double d = i - (win - 1) / 2.0;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    gs += g[i];
  }
  for (double& v : g) v /= gs;
  const double c1 = 1e-4;
  const double c2 = 9e-4;
  double total = 0.0;
  int count = 0;
  for (int64_t r0 = 0; r0 + win <= h; ++r0) {
    for (int64_t q0 = 0; q0 + win <= w; ++q0) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double k = g[i] * g[j];
          const double a = x[r0 + i][q0 + j];
          const double b = y[r0 + i][q0 + j];
          mx += k * a;
          my += k * b;
          sxx += k * a * a;
          syy += k * b * b;
          sxy += k * a * b;
        }
      }
      const double vx = sxx - mx * mx;
      const double vy = syy - my * my;
      const double cxy = sxy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / count;
}

// Central finite differences of f with respect to every element of inputs[k].
// Returns the worst norm-wise relative error over all inputs. The small step
// keeps the stencil from straddling the kinks of absolute-value terms.
inline double gradient_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                             std::vector<Tensor> inputs, double step = 1e-6) {
  for (auto& t : inputs) t = t.detach().clone().requires_grad_(true);
  f(inputs).backward();
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor analytic = inputs[k].grad().detach().clone().reshape({-1});
    Tensor numeric = torch::zeros_like(analytic);
    std::vector<Tensor> probe;
    for (auto& t : inputs) probe.push_back(t.detach().clone());
    auto flat = probe[k].view({-1});
    for (int64_t i = 0; i < flat.numel(); ++i) {
      const double orig = flat[i].item<double>();
      flat[i] = orig + step;
      const double up = f(probe).item<double>();
      flat[i] = orig - step;
      const double down = f(probe).item<double>();
      flat[i] = orig;
      numeric[i] = (up - down) / (2.0 * step);
    }
    const double denom = std::max({analytic.norm().item<double>(), numeric.norm().item<double>(), 1e-12});
    worst = std::max(worst, (analytic - numeric).norm().item<double>() / denom);
  }
  return worst;
}

}  // namespace oracle
