#pragma once

// Serial, loop-nest versions of the network kernels. Slow; used as test oracles and as the
// baseline in the benchmarks.

#include <span>
#include <vector>

#include "grasplab/net/layers.hpp"
#include "grasplab/net/network.hpp"

namespace grasplab::net::reference {

// Direct valid convolution of a [cin][h][w] input with [cout][cin][k][k] kernels.
std::vector<double> conv2d(std::span<const double> in, int cin, int h, int w, std::span<const double> kernel,
                           int cout, int k, int stride, int* out_h, int* out_w);

// Infer-mode forward of one image, returns [3][out_h][out_w] probabilities.
OutputMap forward(const NetworkParams& p, std::span<const float> image, int h, int w);

}  // namespace grasplab::net::reference
