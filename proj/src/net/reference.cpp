#include "grasplab/net/reference.hpp"

#include <algorithm>
#include <cmath>

namespace grasplab::net::reference {

std::vector<double> conv2d(std::span<const double> in, int cin, int h, int w, std::span<const double> kernel,
                           int cout, int k, int stride, int* out_h, int* out_w) {
  const int oh = conv_output_size(h, k, stride), ow = conv_output_size(w, k, stride);
  std::vector<double> out(static_cast<std::size_t>(cout) * oh * ow, 0.0);
  for (int o = 0; o < cout; ++o)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0;
        for (int c = 0; c < cin; ++c)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
              s += kernel[((static_cast<std::size_t>(o) * cin + c) * k + ky) * k + kx] *
                   in[(static_cast<std::size_t>(c) * h + y * stride + ky) * w + x * stride + kx];
        out[(static_cast<std::size_t>(o) * oh + y) * ow + x] = s;
      }
  *out_h = oh;
  *out_w = ow;
  return out;
}

OutputMap forward(const NetworkParams& p, std::span<const float> image, int h, int w) {
  std::vector<double> x(image.begin(), image.end());
  int cur_h = h, cur_w = w;
  for (int l = 0; l < kLayerCount; ++l) {
    const auto& spec = kLayerTable[l];
    const auto& prm = p.layers[l];
    const std::vector<double> kern(prm.kernel.begin(), prm.kernel.end());
    int oh = 0, ow = 0;
    auto y = conv2d(x, in_channels(l), cur_h, cur_w, kern, spec.out_channels, spec.kernel, spec.stride, &oh, &ow);
    const std::size_t plane = static_cast<std::size_t>(oh) * ow;
    for (int c = 0; c < spec.out_channels; ++c)
      for (std::size_t i = 0; i < plane; ++i) {
        double& v = y[c * plane + i];
        if (spec.batch_norm)
          v = prm.gamma[c] * (v - prm.running_mean[c]) / std::sqrt(prm.running_var[c] + kBatchNormEpsilon) +
              prm.beta[c];
        else
          v += prm.bias[c];
        if (l + 1 < kLayerCount) v = std::max(v, 0.0);
        else v = std::clamp(1.0 / (1.0 + std::exp(-v)), 1e-7, 1 - 1e-7);
      }
    x = std::move(y);
    cur_h = oh;
    cur_w = ow;
  }
  OutputMap out{cur_h, cur_w, {}};
  out.probs.assign(x.begin(), x.end());
  return out;
}

}  // namespace grasplab::net::reference
