// Serial reference kernels against the im2col + GEMM path, plus whole-map latency.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "grasplab/core/random.hpp"
#include "grasplab/net/kernels.hpp"
#include "grasplab/net/network.hpp"
#include "grasplab/net/reference.hpp"
#include "grasplab/policy/policy.hpp"
#include "grasplab/sim/scene.hpp"
#include "grasplab/sim/simulator.hpp"

using namespace grasplab;

namespace {

template <class T>
std::vector<T> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(2 * uniform01(rng) - 1);
  return v;
}

// Second layer on one window: 32 x 14 x 14 in, 48 kernels of 5 x 5.
constexpr int kCin = 32, kSide = 14, kCout = 48, kK = 5;

void BM_ConvReference(benchmark::State& state) {
  const auto in = noise<double>(kCin * kSide * kSide, 1);
  const auto w = noise<double>(kCout * kCin * kK * kK, 2);
  int oh = 0, ow = 0;
  for (auto _ : state) {
    auto out = net::reference::conv2d(in, kCin, kSide, kSide, w, kCout, kK, 1, &oh, &ow);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ConvReference);

void BM_ConvIm2colGemm(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const net::kernels::ConvShape s{kCin, 1, kSide, kSide, kK, 1};
  const auto in = noise<float>(kCin * kSide * kSide, 1);
  const auto w = noise<float>(kCout * kCin * kK * kK, 2);
  std::vector<float> cols(s.col_rows() * s.col_cols()), out(kCout * s.col_cols());
  for (auto _ : state) {
    net::kernels::im2col<float>(s, in, cols);
    net::kernels::gemm<float>(kCout, static_cast<int>(s.col_rows()), static_cast<int>(s.col_cols()), w.data(),
                              cols.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  omp_set_num_threads(omp_get_num_procs());
}
BENCHMARK(BM_ConvIm2colGemm)->Arg(1)->Arg(omp_get_num_procs());

void BM_ForwardReference(benchmark::State& state) {
  const auto p = net::init_params(3);
  const auto img = noise<float>(40 * 44, 4);
  for (auto _ : state) benchmark::DoNotOptimize(net::reference::forward(p, img, 40, 44).probs.data());
}
BENCHMARK(BM_ForwardReference)->Unit(benchmark::kMillisecond);

void BM_ForwardFull(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const auto p = net::init_params(3);
  const auto img = noise<float>(40 * 44, 4);
  for (auto _ : state) benchmark::DoNotOptimize(net::forward_full(p, img, 40, 44).probs.data());
  omp_set_num_threads(omp_get_num_procs());
}
BENCHMARK(BM_ForwardFull)->Arg(1)->Arg(omp_get_num_procs())->Unit(benchmark::kMillisecond);

// All 20 rotations of a 10-cylinder scene.
void BM_FullValueMap(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const auto p = net::init_params(5);
  const auto scene = sim::spawn_scene(10, sim::ObjectSpec{}, 6);
  const auto depth = sim::render_depth(scene);
  for (auto _ : state) benchmark::DoNotOptimize(policy::evaluate(p, depth).values.data());
  omp_set_num_threads(omp_get_num_procs());
}
BENCHMARK(BM_FullValueMap)->Arg(1)->Arg(omp_get_num_procs())->Unit(benchmark::kMillisecond)->Iterations(5);

}  // namespace

BENCHMARK_MAIN();
