#pragma once

// OpenMP-parallel building blocks of the convolution layers. Activations are stored
// channel-major across the batch: [channel][batch][row][col], i.e. a C x (B*H*W) matrix.

#include <cstddef>
#include <span>

namespace grasplab::net::kernels {

struct ConvShape {
  int channels;  // input channels
  int batch;
  int in_h, in_w;
  int kernel;
  int stride;
  int out_h() const { return (in_h - kernel) / stride + 1; }
  int out_w() const { return (in_w - kernel) / stride + 1; }
  std::size_t col_rows() const { return static_cast<std::size_t>(channels) * kernel * kernel; }
  std::size_t col_cols() const { return static_cast<std::size_t>(batch) * out_h() * out_w(); }
};

// cols[(c, ky, kx)][(b, oy, ox)] = in[c][b][oy * s + ky][ox * s + kx]
template <class T>
void im2col(const ConvShape& s, std::span<const T> in, std::span<T> cols);

// Adjoint of im2col: accumulates into a zeroed input gradient.
template <class T>
void col2im(const ConvShape& s, std::span<const T> cols, std::span<T> in_grad);

// out (rows x n) = a (rows x k) * b (k x n), all row-major.
template <class T>
void gemm(int rows, int k, int n, const T* a, const T* b, T* out);
// out (rows x n) = a^T * b with a stored (k x rows).
template <class T>
void gemm_tn(int rows, int k, int n, const T* a, const T* b, T* out);
// out (rows x n) = a * b^T with b stored (n x k).
template <class T>
void gemm_nt(int rows, int k, int n, const T* a, const T* b, T* out);

}  // namespace grasplab::net::kernels
