#include "grasplab/net/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>

namespace grasplab::net::kernels {

template <class T>
void im2col(const ConvShape& s, std::span<const T> in, std::span<T> cols) {
  const int oh = s.out_h(), ow = s.out_w();
  const std::size_t plane = static_cast<std::size_t>(s.in_h) * s.in_w;
  const std::size_t ncols = s.col_cols();
  const int kk = s.kernel * s.kernel;
  const int rows = s.channels * kk;
#pragma omp parallel for schedule(static)
  for (int row = 0; row < rows; ++row) {
    const int c = row / kk;
    const int ky = (row % kk) / s.kernel;
    const int kx = row % s.kernel;
    T* dst = cols.data() + row * ncols;
    for (int b = 0; b < s.batch; ++b) {
      const T* src = in.data() + (static_cast<std::size_t>(c) * s.batch + b) * plane;
      for (int oy = 0; oy < oh; ++oy) {
        const T* line = src + static_cast<std::size_t>(oy * s.stride + ky) * s.in_w + kx;
        if (s.stride == 1) {
          std::copy(line, line + ow, dst);
        } else {
          for (int ox = 0; ox < ow; ++ox) dst[ox] = line[ox * s.stride];
        }
        dst += ow;
      }
    }
  }
}

template <class T>
void col2im(const ConvShape& s, std::span<const T> cols, std::span<T> in_grad) {
  const int oh = s.out_h(), ow = s.out_w();
  const std::size_t plane = static_cast<std::size_t>(s.in_h) * s.in_w;
  const std::size_t ncols = s.col_cols();
  const int kk = s.kernel * s.kernel;
  // Channels are independent, so each thread owns a disjoint slice of the gradient.
#pragma omp parallel for schedule(static)
  for (int c = 0; c < s.channels; ++c) {
    for (int r = 0; r < kk; ++r) {
      const int ky = r / s.kernel, kx = r % s.kernel;
      const T* src = cols.data() + (static_cast<std::size_t>(c) * kk + r) * ncols;
      for (int b = 0; b < s.batch; ++b) {
        T* dst = in_grad.data() + (static_cast<std::size_t>(c) * s.batch + b) * plane;
        for (int oy = 0; oy < oh; ++oy) {
          T* line = dst + static_cast<std::size_t>(oy * s.stride + ky) * s.in_w + kx;
          for (int ox = 0; ox < ow; ++ox) line[ox * s.stride] += src[ox];
          src += ow;
        }
      }
    }
  }
}

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
void gemm(int rows, int k, int n, const T* a, const T* b, T* out) {
  Eigen::Map<const RowMat<T>> A(a, rows, k);
  Eigen::Map<const RowMat<T>> B(b, k, n);
  Eigen::Map<RowMat<T>> C(out, rows, n);
  C.noalias() = A * B;
}

template <class T>
void gemm_tn(int rows, int k, int n, const T* a, const T* b, T* out) {
  Eigen::Map<const RowMat<T>> A(a, k, rows);
  Eigen::Map<const RowMat<T>> B(b, k, n);
  Eigen::Map<RowMat<T>> C(out, rows, n);
  C.noalias() = A.transpose() * B;
}

template <class T>
void gemm_nt(int rows, int k, int n, const T* a, const T* b, T* out) {
  Eigen::Map<const RowMat<T>> A(a, rows, k);
  Eigen::Map<const RowMat<T>> B(b, n, k);
  Eigen::Map<RowMat<T>> C(out, rows, n);
  C.noalias() = A * B.transpose();
}

#define GRASPLAB_INSTANTIATE(T)                                                   \
  template void im2col<T>(const ConvShape&, std::span<const T>, std::span<T>);    \
  template void col2im<T>(const ConvShape&, std::span<const T>, std::span<T>);    \
  template void gemm<T>(int, int, int, const T*, const T*, T*);                    \
  template void gemm_tn<T>(int, int, int, const T*, const T*, T*);                 \
  template void gemm_nt<T>(int, int, int, const T*, const T*, T*);

GRASPLAB_INSTANTIATE(float)
GRASPLAB_INSTANTIATE(double)
#undef GRASPLAB_INSTANTIATE

}  // namespace grasplab::net::kernels
