#include "grasplab/net/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grasplab/core/random.hpp"
#include "grasplab/image/transform.hpp"
#include "grasplab/net/kernels.hpp"

namespace grasplab::net {

namespace {

template <class T>
T sigmoid(T z) {
  return z >= 0 ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
}

// -log(sigmoid(z)) evaluated without overflow.
template <class T>
T softplus(T z) {
  return std::max(z, T(0)) + std::log1p(std::exp(-std::abs(z)));
}

constexpr double kProbFloor = 1e-7;

template <class T>
void check_params(const BasicParams<T>& p) {
  for (int l = 0; l < kLayerCount; ++l) {
    const auto& spec = kLayerTable[l];
    const auto& layer = p.layers[l];
    const std::size_t c = spec.out_channels;
    bool ok = layer.kernel.size() == c * in_channels(l) * spec.kernel * spec.kernel;
    if (spec.batch_norm) {
      ok = ok && layer.gamma.size() == c && layer.beta.size() == c && layer.running_mean.size() == c &&
           layer.running_var.size() == c;
    } else {
      ok = ok && layer.bias.size() == c;
    }
    if (!ok) throw ShapeError("parameter tensors of layer " + std::to_string(l + 1) + " have the wrong size");
  }
}

}  // namespace

template <class T>
ForwardPass<T> forward(const BasicParams<T>& p, std::span<const T> input, int batch, int h, int w,
                       const ForwardMode& mode) {
  check_params(p);
  if (batch < 1) throw ShapeError("empty batch");
  if (h < image::kWindowSize || w < image::kWindowSize)
    throw ShapeError("input " + std::to_string(h) + "x" + std::to_string(w) + " is smaller than a window");
  if (input.size() != static_cast<std::size_t>(batch) * h * w) throw ShapeError("input size does not match shape");

  ForwardPass<T> pass;
  pass.batch = batch;
  pass.mode = mode;

  std::vector<T> x(input.begin(), input.end());
  int cur_h = h, cur_w = w;
  for (int l = 0; l < kLayerCount; ++l) {
    const auto& spec = kLayerTable[l];
    const auto& prm = p.layers[l];
    auto& cache = pass.layers[l];
    const kernels::ConvShape shape{in_channels(l), batch, cur_h, cur_w, spec.kernel, spec.stride};
    cache.in_h = cur_h;
    cache.in_w = cur_w;
    cache.out_h = shape.out_h();
    cache.out_w = shape.out_w();
    const int cout = spec.out_channels;
    const std::size_t n = shape.col_cols();
    const int k = static_cast<int>(shape.col_rows());

    cache.cols.resize(shape.col_rows() * n);
    kernels::im2col<T>(shape, x, cache.cols);
    cache.pre.resize(static_cast<std::size_t>(cout) * n);
    kernels::gemm<T>(cout, k, static_cast<int>(n), prm.kernel.data(), cache.cols.data(), cache.pre.data());

    std::vector<T> y(cache.pre.size());
    if (spec.batch_norm) {
      cache.mean.assign(cout, T(0));
      cache.var.assign(cout, T(0));
      cache.xhat.resize(cache.pre.size());
#pragma omp parallel for schedule(static)
      for (int c = 0; c < cout; ++c) {
        const T* row = cache.pre.data() + c * n;
        T mean, var;
        if (mode.batch_statistics) {
          T s = 0;
          for (std::size_t i = 0; i < n; ++i) s += row[i];
          mean = s / T(n);
          T q = 0;
          for (std::size_t i = 0; i < n; ++i) q += (row[i] - mean) * (row[i] - mean);
          var = q / T(n);
        } else {
          mean = prm.running_mean[c];
          var = prm.running_var[c];
        }
        cache.mean[c] = mean;
        cache.var[c] = var;
        const T inv = T(1) / std::sqrt(var + T(kBatchNormEpsilon));
        T* xh = cache.xhat.data() + c * n;
        T* out = y.data() + c * n;
        for (std::size_t i = 0; i < n; ++i) {
          xh[i] = (row[i] - mean) * inv;
          out[i] = prm.gamma[c] * xh[i] + prm.beta[c];
        }
      }
    } else {
      for (int c = 0; c < cout; ++c) {
        const T* row = cache.pre.data() + c * n;
        T* out = y.data() + c * n;
        for (std::size_t i = 0; i < n; ++i) out[i] = row[i] + prm.bias[c];
      }
    }

    if (l + 1 == kLayerCount) {
      pass.logits = std::move(y);
      pass.probs.resize(pass.logits.size());
      for (std::size_t i = 0; i < pass.logits.size(); ++i)
        pass.probs[i] = std::clamp(sigmoid(pass.logits[i]), T(kProbFloor), T(1 - kProbFloor));
      pass.out_h = cache.out_h;
      pass.out_w = cache.out_w;
      break;
    }

    for (auto& v : y) v = std::max(v, T(0));
    cache.act = y;
    if (mode.dropout && spec.dropout > 0) {
      Rng rng(derive_seed(mode.dropout_seed, {0xd50, static_cast<std::uint64_t>(l)}));
      const T scale = T(1) / T(1 - spec.dropout);
      cache.keep.resize(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        cache.keep[i] = uniform01(rng) >= spec.dropout;
        y[i] = cache.keep[i] ? y[i] * scale : T(0);
      }
    } else {
      cache.keep.clear();
    }
    cache.out = y;
    x = std::move(y);
    cur_h = cache.out_h;
    cur_w = cache.out_w;
  }
  return pass;
}

std::array<float, kOutputs> forward_window(const NetworkParams& p, std::span<const float> window,
                                           const ForwardMode& mode) {
  if (window.size() != static_cast<std::size_t>(image::kWindowSize) * image::kWindowSize)
    throw ShapeError("window must be 32x32");
  const auto pass = forward<float>(p, window, 1, image::kWindowSize, image::kWindowSize, mode);
  return {pass.probs[0], pass.probs[1], pass.probs[2]};
}

namespace {

// Reused per thread so repeated full-image inference does not reallocate.
struct InferWorkspace {
  std::vector<float> x, cols, y;
};

}  // namespace

OutputMap forward_full(const NetworkParams& p, std::span<const float> image, int h, int w) {
  check_params(p);
  if (h < image::kWindowSize || w < image::kWindowSize)
    throw ShapeError("input " + std::to_string(h) + "x" + std::to_string(w) + " is smaller than a window");
  if (image.size() != static_cast<std::size_t>(h) * w) throw ShapeError("input size does not match shape");

  thread_local InferWorkspace ws;
  ws.x.assign(image.begin(), image.end());
  int cur_h = h, cur_w = w;
  for (int l = 0; l < kLayerCount; ++l) {
    const auto& spec = kLayerTable[l];
    const auto& prm = p.layers[l];
    const kernels::ConvShape shape{in_channels(l), 1, cur_h, cur_w, spec.kernel, spec.stride};
    const int cout = spec.out_channels;
    const std::size_t n = shape.col_cols();
    const float* src = ws.x.data();
    if (spec.kernel != 1 || spec.stride != 1) {
      if (ws.cols.size() < shape.col_rows() * n) ws.cols.resize(shape.col_rows() * n);
      kernels::im2col<float>(shape, std::span<const float>(ws.x.data(), ws.x.size()),
                             std::span<float>(ws.cols.data(), shape.col_rows() * n));
      src = ws.cols.data();
    }
    if (ws.y.size() < static_cast<std::size_t>(cout) * n) ws.y.resize(static_cast<std::size_t>(cout) * n);
    kernels::gemm<float>(cout, static_cast<int>(shape.col_rows()), static_cast<int>(n), prm.kernel.data(), src,
                         ws.y.data());
    const bool last = l + 1 == kLayerCount;
    for (int c = 0; c < cout; ++c) {
      float* row = ws.y.data() + c * n;
      if (spec.batch_norm) {
        const float inv = 1.0f / std::sqrt(prm.running_var[c] + static_cast<float>(kBatchNormEpsilon));
        const float mean = prm.running_mean[c], gamma = prm.gamma[c], beta = prm.beta[c];
        for (std::size_t i = 0; i < n; ++i) row[i] = std::max(gamma * ((row[i] - mean) * inv) + beta, 0.0f);
      } else if (last) {
        for (std::size_t i = 0; i < n; ++i)
          row[i] = std::clamp(sigmoid(row[i] + prm.bias[c]), float(kProbFloor), float(1 - kProbFloor));
      } else {
        for (std::size_t i = 0; i < n; ++i) row[i] = std::max(row[i] + prm.bias[c], 0.0f);
      }
    }
    std::swap(ws.x, ws.y);
    cur_h = shape.out_h();
    cur_w = shape.out_w();
  }
  OutputMap out{cur_h, cur_w, {}};
  out.probs.assign(ws.x.begin(), ws.x.begin() + static_cast<long>(kOutputs) * cur_h * cur_w);
  return out;
}

template <class T>
LossValue<T> loss_and_gradient(const BasicParams<T>& p, const BasicTrainBatch<T>& batch, const ForwardMode& mode,
                               double l2_scale, BasicParams<T>* grad, ForwardPass<T>* pass_out) {
  const int bsz = batch.size();
  const std::size_t window_px = static_cast<std::size_t>(image::kWindowSize) * image::kWindowSize;
  if (bsz < 1 || batch.windows.size() != bsz * window_px || batch.rewards.size() != static_cast<std::size_t>(bsz) ||
      batch.weights.size() != static_cast<std::size_t>(bsz))
    throw ShapeError("inconsistent training batch");
  for (int b = 0; b < bsz; ++b)
    if (batch.d_index[b] < 0 || batch.d_index[b] >= kOutputs) throw ShapeError("d_index out of range");

  auto pass = forward<T>(p, batch.windows, bsz, image::kWindowSize, image::kWindowSize, mode);

  LossValue<T> loss;
  std::vector<T> dlogits(pass.logits.size(), T(0));
  for (int b = 0; b < bsz; ++b) {
    const int d = batch.d_index[b];
    const std::size_t idx = static_cast<std::size_t>(d) * bsz + b;
    const T z = pass.logits[idx];
    const T r = batch.rewards[b];
    // r * softplus(-z) + (1 - r) * softplus(z)
    const T ce = r * softplus(-z) + (T(1) - r) * softplus(z);
    loss.cross_entropy += batch.weights[b] * ce;
    dlogits[idx] = batch.weights[b] * (sigmoid(z) - r) / T(bsz);
  }
  loss.cross_entropy /= T(bsz);
  for (int l = 0; l < kLayerCount; ++l) {
    T sq = 0;
    for (T v : p.layers[l].kernel) sq += v * v;
    loss.regularizer += T(l2_scale * kLayerTable[l].l2) * sq;
  }
  loss.total = loss.cross_entropy + loss.regularizer;

  if (grad) {
    *grad = zero_params<T>();
    std::vector<T> dy = std::move(dlogits);
    for (int l = kLayerCount - 1; l >= 0; --l) {
      const auto& spec = kLayerTable[l];
      const auto& prm = p.layers[l];
      auto& g = grad->layers[l];
      const auto& cache = pass.layers[l];
      const int cout = spec.out_channels;
      const std::size_t n = static_cast<std::size_t>(bsz) * cache.out_h * cache.out_w;
      const int k = in_channels(l) * spec.kernel * spec.kernel;

      if (l + 1 < kLayerCount) {
        // dy currently holds the gradient of the layer output (after dropout).
        const bool dropped = !cache.keep.empty();
        const T scale = dropped ? T(1) / T(1 - spec.dropout) : T(1);
        for (std::size_t i = 0; i < dy.size(); ++i) {
          T v = dy[i];
          if (dropped) v = cache.keep[i] ? v * scale : T(0);
          dy[i] = cache.act[i] > T(0) ? v : T(0);
        }
      }

      std::vector<T> dpre(dy.size());
      if (spec.batch_norm) {
#pragma omp parallel for schedule(static)
        for (int c = 0; c < cout; ++c) {
          const T* gy = dy.data() + c * n;
          const T* xh = cache.xhat.data() + c * n;
          T sum = 0, dot = 0;
          for (std::size_t i = 0; i < n; ++i) {
            sum += gy[i];
            dot += gy[i] * xh[i];
          }
          g.beta[c] = sum;
          g.gamma[c] = dot;
          const T inv = T(1) / std::sqrt(cache.var[c] + T(kBatchNormEpsilon));
          T* out = dpre.data() + c * n;
          if (pass.mode.batch_statistics) {
            const T coef = prm.gamma[c] * inv / T(n);
            for (std::size_t i = 0; i < n; ++i) out[i] = coef * (T(n) * gy[i] - sum - xh[i] * dot);
          } else {
            const T coef = prm.gamma[c] * inv;
            for (std::size_t i = 0; i < n; ++i) out[i] = coef * gy[i];
          }
        }
      } else {
        for (int c = 0; c < cout; ++c) {
          const T* gy = dy.data() + c * n;
          T sum = 0;
          for (std::size_t i = 0; i < n; ++i) sum += gy[i];
          g.bias[c] = sum;
        }
        dpre = dy;
      }

      kernels::gemm_nt<T>(cout, static_cast<int>(n), k, dpre.data(), cache.cols.data(), g.kernel.data());
      const T reg = T(2 * l2_scale * spec.l2);
      for (std::size_t i = 0; i < g.kernel.size(); ++i) g.kernel[i] += reg * prm.kernel[i];

      if (l == 0) break;
      std::vector<T> dcols(static_cast<std::size_t>(k) * n);
      kernels::gemm_tn<T>(k, cout, static_cast<int>(n), prm.kernel.data(), dpre.data(), dcols.data());
      const kernels::ConvShape shape{in_channels(l), bsz, cache.in_h, cache.in_w, spec.kernel, spec.stride};
      std::vector<T> dx(static_cast<std::size_t>(in_channels(l)) * bsz * cache.in_h * cache.in_w, T(0));
      kernels::col2im<T>(shape, dcols, dx);
      dy = std::move(dx);
    }
  }
  if (pass_out) *pass_out = std::move(pass);
  return loss;
}

template ForwardPass<float> forward<float>(const BasicParams<float>&, std::span<const float>, int, int, int,
                                           const ForwardMode&);
template ForwardPass<double> forward<double>(const BasicParams<double>&, std::span<const double>, int, int, int,
                                             const ForwardMode&);
template LossValue<float> loss_and_gradient<float>(const BasicParams<float>&, const BasicTrainBatch<float>&,
                                                   const ForwardMode&, double, BasicParams<float>*,
                                                   ForwardPass<float>*);
template LossValue<double> loss_and_gradient<double>(const BasicParams<double>&, const BasicTrainBatch<double>&,
                                                     const ForwardMode&, double, BasicParams<double>*,
                                                     ForwardPass<double>*);

StepResult train_step(NetworkParams& p, SgdMomentum& opt, const TrainBatch& batch, std::uint64_t dropout_seed,
                      double l2_scale) {
  NetworkParams grad;
  ForwardPass<float> pass;
  const auto mode = ForwardMode::train(dropout_seed);
  const auto loss = loss_and_gradient<float>(p, batch, mode, l2_scale, &grad, &pass);

  if (!std::isfinite(loss.total)) throw NonFiniteError("non-finite training loss");
  bool finite = true;
  grad.for_each_trainable([&](const std::vector<float>& t) {
    for (float v : t) finite = finite && std::isfinite(v);
  });
  if (!finite) throw NonFiniteError("non-finite gradient");

  if (opt.velocity.layers[0].kernel.empty()) opt.velocity = zero_params<float>();
  const auto mu = static_cast<float>(opt.momentum);
  const auto lr = static_cast<float>(opt.learning_rate);
  for (int l = 0; l < kLayerCount; ++l) {
    auto& prm = p.layers[l];
    auto& vel = opt.velocity.layers[l];
    const auto& g = grad.layers[l];
    auto update = [&](std::vector<float>& w, std::vector<float>& v, const std::vector<float>& dw) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = mu * v[i] + dw[i];
        w[i] -= lr * v[i];
      }
    };
    update(prm.kernel, vel.kernel, g.kernel);
    update(prm.bias, vel.bias, g.bias);
    update(prm.gamma, vel.gamma, g.gamma);
    update(prm.beta, vel.beta, g.beta);

    if (kLayerTable[l].batch_norm) {
      const auto& cache = pass.layers[l];
      const double n = static_cast<double>(batch.size()) * cache.out_h * cache.out_w;
      const double unbias = n > 1 ? n / (n - 1) : 1.0;
      const double m = kBatchNormMomentum;
      for (int c = 0; c < kLayerTable[l].out_channels; ++c) {
        prm.running_mean[c] = static_cast<float>(m * prm.running_mean[c] + (1 - m) * cache.mean[c]);
        prm.running_var[c] = static_cast<float>(m * prm.running_var[c] + (1 - m) * cache.var[c] * unbias);
      }
    }
  }
  return {loss};
}

}  // namespace grasplab::net
