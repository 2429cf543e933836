#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "grasplab/net/layers.hpp"

namespace grasplab::net {

inline constexpr int kOutputs = 3;

struct ForwardMode {
  bool dropout = false;
  std::uint64_t dropout_seed = 0;
  bool batch_statistics = false;

  static ForwardMode train(std::uint64_t seed) { return {true, seed, true}; }
  static ForwardMode infer() { return {}; }
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
struct LayerCache {
  int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  std::vector<T> cols;          // im2col of the layer input
  std::vector<T> pre;           // convolution output
  std::vector<T> xhat;          // batch-normalized pre-activation
  std::vector<T> mean, var;     // per-channel statistics that were applied
  std::vector<T> act;           // ReLU output
  std::vector<std::uint8_t> keep;
  std::vector<T> out;           // after dropout; input of the next layer
};

template <class T>
struct ForwardPass {
  int batch = 0;
  int out_h = 0, out_w = 0;
  ForwardMode mode;
  std::array<LayerCache<T>, kLayerCount> layers;
  std::vector<T> logits;  // [3][batch][out_h][out_w]
  std::vector<T> probs;

  T prob(int d, int b, int y = 0, int x = 0) const {
    return probs[((static_cast<std::size_t>(d) * batch + b) * out_h + y) * out_w + x];
  }
};

// Runs the network on `batch` single-channel h x w inputs laid out [batch][h][w].
template <class T>
ForwardPass<T> forward(const BasicParams<T>& p, std::span<const T> input, int batch, int h, int w,
                       const ForwardMode& mode);

// 32 x 32 normalized window -> success probability per jaw opening.
std::array<float, kOutputs> forward_window(const NetworkParams& p, std::span<const float> window,
                                           const ForwardMode& mode = ForwardMode::infer());

struct OutputMap {
  int height = 0, width = 0;
  std::vector<float> probs;  // [3][height][width]
  float at(int d, int row, int col) const {
    return probs[(static_cast<std::size_t>(d) * height + row) * width + col];
  }
};

// Whole-image inference (batch statistics frozen, no dropout).
OutputMap forward_full(const NetworkParams& p, std::span<const float> image, int h, int w);

template <class T>
struct BasicTrainBatch {
  std::vector<T> windows;  // [B][32][32]
  std::vector<int> d_index;
  std::vector<T> rewards;
  std::vector<T> weights;
  int size() const { return static_cast<int>(d_index.size()); }
};
using TrainBatch = BasicTrainBatch<float>;

template <class T>
struct LossValue {
  T total = 0;
  T cross_entropy = 0;
  T regularizer = 0;
};

// Weighted cross entropy at the attempted opening plus l2_scale * sum_l lambda_l ||K_l||^2.
// Fills `grad` (same layout as params) when non-null; `pass` receives the forward pass.
template <class T>
LossValue<T> loss_and_gradient(const BasicParams<T>& p, const BasicTrainBatch<T>& batch, const ForwardMode& mode,
                               double l2_scale, BasicParams<T>* grad = nullptr, ForwardPass<T>* pass = nullptr);

struct SgdMomentum {
  double learning_rate = 0.01;
  double momentum = 0.9;
  NetworkParams velocity;  // lazily shaped on first step
};

struct StepResult {
  LossValue<float> loss;
};

// One minibatch step: train-mode forward, analytic backward, momentum update, running
// statistics update. Throws NonFiniteError (parameters untouched) on a non-finite loss or gradient.
StepResult train_step(NetworkParams& p, SgdMomentum& opt, const TrainBatch& batch, std::uint64_t dropout_seed,
                      double l2_scale);

}  // namespace grasplab::net
