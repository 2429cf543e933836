#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace grasplab::net {

struct LayerSpec {
  int out_channels;
  int kernel;
  int stride;
  bool batch_norm;
  double dropout;  // drop probability; 0 disables
  double l2;       // per-layer regularizer coefficient
};

inline constexpr int kInputChannels = 1;
inline constexpr int kLayerCount = 5;
inline constexpr int kTrainingWindow = 32;

// Five valid convolutions, no pooling. Windows 32 -> 14 -> 10 -> 6 -> 1 -> 1;
// a 110 x 110 overview gives 53 -> 49 -> 45 -> 40 -> 40.
inline constexpr std::array<LayerSpec, kLayerCount> kLayerTable{{
    {32, 5, 2, true, 0.4, 0.3},
    {48, 5, 1, true, 0.5, 0.3},
    {64, 5, 1, true, 0.6, 0.3},
    {142, 6, 1, false, 0.7, 8.0},
    {3, 1, 1, false, 0.0, 0.3},
}};

inline constexpr int in_channels(int layer) { return layer == 0 ? kInputChannels : kLayerTable[layer - 1].out_channels; }

inline constexpr int conv_output_size(int n, int kernel, int stride) { return n < kernel ? 0 : (n - kernel) / stride + 1; }

// Spatial size after the input and after each layer.
std::vector<int> spatial_trace(int input_size);

// Input size whose output has the given size, counting whole training windows.
int required_input_size(int output_size);

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.99;

// Per-layer tensors. Kernels are [out][in][ky][kx].
template <class T>
struct LayerParams {
  std::vector<T> kernel;
  std::vector<T> bias;  // layers without batch norm
  std::vector<T> gamma, beta;
  std::vector<T> running_mean, running_var;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

template <class T>
struct BasicParams {
  std::array<LayerParams<T>, kLayerCount> layers;

  friend bool operator==(const BasicParams&, const BasicParams&) = default;

  template <class U>
  BasicParams<U> cast() const {
    BasicParams<U> out;
    auto conv = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
    for (int l = 0; l < kLayerCount; ++l) {
      const auto& s = layers[l];
      auto& d = out.layers[l];
      d.kernel = conv(s.kernel);
      d.bias = conv(s.bias);
      d.gamma = conv(s.gamma);
      d.beta = conv(s.beta);
      d.running_mean = conv(s.running_mean);
      d.running_var = conv(s.running_var);
    }
    return out;
  }

  // Visit every trainable tensor in declaration order.
  template <class F>
  void for_each_trainable(F&& f) {
    for (auto& l : layers) {
      f(l.kernel);
      f(l.bias);
      f(l.gamma);
      f(l.beta);
    }
  }
  template <class F>
  void for_each_trainable(F&& f) const {
    for (const auto& l : layers) {
      f(l.kernel);
      f(l.bias);
      f(l.gamma);
      f(l.beta);
    }
  }
};

using NetworkParams = BasicParams<float>;

// Allocates every tensor with zeros (running variance 1).
template <class T>
BasicParams<T> zero_params();

// Fan-in scaled uniform kernels, zero biases, identity batch norm.
NetworkParams init_params(unsigned long long seed);

std::size_t trainable_parameter_count(const NetworkParams& p);

}  // namespace grasplab::net
