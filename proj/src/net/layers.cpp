#include "grasplab/net/layers.hpp"

#include <algorithm>
#include <cmath>

#include "grasplab/core/random.hpp"

namespace grasplab::net {

std::vector<int> spatial_trace(int input_size) {
  std::vector<int> trace{input_size};
  int n = input_size;
  for (const auto& spec : kLayerTable) {
    n = conv_output_size(n, spec.kernel, spec.stride);
    trace.push_back(n);
  }
  return trace;
}

int required_input_size(int output_size) {
  int total_stride = 1;
  for (const auto& spec : kLayerTable) total_stride *= spec.stride;
  return kTrainingWindow + total_stride * (output_size - 1);
}

template <class T>
BasicParams<T> zero_params() {
  BasicParams<T> p;
  for (int l = 0; l < kLayerCount; ++l) {
    const auto& spec = kLayerTable[l];
    auto& layer = p.layers[l];
    const std::size_t c = spec.out_channels;
    layer.kernel.assign(c * in_channels(l) * spec.kernel * spec.kernel, T(0));
    if (spec.batch_norm) {
      layer.gamma.assign(c, T(0));
      layer.beta.assign(c, T(0));
      layer.running_mean.assign(c, T(0));
      layer.running_var.assign(c, T(1));
    } else {
      layer.bias.assign(c, T(0));
    }
  }
  return p;
}

template BasicParams<float> zero_params<float>();
template BasicParams<double> zero_params<double>();

NetworkParams init_params(unsigned long long seed) {
  auto p = zero_params<float>();
  Rng rng(derive_seed(seed, {0x1417}));
  for (int l = 0; l < kLayerCount; ++l) {
    const auto& spec = kLayerTable[l];
    auto& layer = p.layers[l];
    const double fan_in = static_cast<double>(in_channels(l)) * spec.kernel * spec.kernel;
    // He-style bound for the ReLU layers, plain 1/sqrt(fan_in) for the head.
    const double bound = (l + 1 < kLayerCount ? std::sqrt(6.0 / fan_in) : std::sqrt(1.0 / fan_in));
    for (auto& w : layer.kernel) w = static_cast<float>((2.0 * uniform01(rng) - 1.0) * bound);
    if (spec.batch_norm) std::fill(layer.gamma.begin(), layer.gamma.end(), 1.0f);
  }
  return p;
}

std::size_t trainable_parameter_count(const NetworkParams& p) {
  std::size_t n = 0;
  p.for_each_trainable([&](const std::vector<float>& t) { n += t.size(); });
  return n;
}

}  // namespace grasplab::net
