#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <thread>
#include <filesystem>

#include "grasplab/core/random.hpp"
#include "grasplab/net/layers.hpp"
#include "grasplab/net/network.hpp"
#include "grasplab/net/reference.hpp"
#include "grasplab/net/snapshot.hpp"

using namespace grasplab;
using namespace grasplab::net;

namespace {

std::vector<float> random_image(Rng& rng, int h, int w) {
  std::vector<float> v(static_cast<std::size_t>(h) * w);
  for (auto& x : v) x = static_cast<float>(2 * uniform01(rng) - 1);
  return v;
}

// Perturb batch-norm running statistics so infer mode is not the identity.
template <class P>
void randomize_running_stats(P& p, Rng& rng) {
  for (auto& l : p.layers) {
    for (auto& m : l.running_mean) m = 0.2 * (2 * uniform01(rng) - 1);
    for (auto& v : l.running_var) v = 0.5 + uniform01(rng);
    for (auto& g : l.gamma) g = 0.8 + 0.4 * uniform01(rng);
    for (auto& b : l.beta) b = 0.1 * (2 * uniform01(rng) - 1);
    for (auto& b : l.bias) b = 0.1 * (2 * uniform01(rng) - 1);
  }
}

BasicTrainBatch<double> random_batch(Rng& rng, int n) {
  BasicTrainBatch<double> b;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 32 * 32; ++k) b.windows.push_back(2 * uniform01(rng) - 1);
    b.d_index.push_back(static_cast<int>(uniform_below(rng, 3)));
    b.rewards.push_back(static_cast<double>(uniform_below(rng, 2)));
    b.weights.push_back(0.5 + uniform01(rng));
  }
  return b;
}

}  // namespace

TEST(Layers, SpatialTraceFollowsValidConvolutionArithmetic) {
  EXPECT_EQ(spatial_trace(32), (std::vector<int>{32, 14, 10, 6, 1, 1}));
  EXPECT_EQ(spatial_trace(110), (std::vector<int>{110, 53, 49, 45, 40, 40}));
  EXPECT_EQ(required_input_size(1), 32);
  EXPECT_EQ(required_input_size(40), 110);
}

TEST(Layers, ParameterCountMatchesTable) {
  // Kernels plus BN scale/shift on L1-L3, biases on L4-L5.
  const std::size_t expected = 32 * 1 * 25 + 2 * 32 + 48 * 32 * 25 + 2 * 48 + 64 * 48 * 25 + 2 * 64 +
                               142 * 64 * 36 + 142 + 3 * 142 + 3;
  EXPECT_EQ(trainable_parameter_count(init_params(1)), expected);
  EXPECT_GE(expected, 400000u);
  EXPECT_LE(expected, 500000u);
}

TEST(Network, ZeroParamsGiveOneHalf) {
  auto p = zero_params<float>();
  std::vector<float> w(32 * 32, 0.0f);
  for (float v : forward_window(p, w)) EXPECT_FLOAT_EQ(v, 0.5f);
}

TEST(Network, RejectsWrongShapes) {
  auto p = init_params(3);
  std::vector<float> w(31 * 32, 0.0f);
  EXPECT_THROW(forward_window(p, w), ShapeError);
  std::vector<float> small(31 * 40, 0.0f);
  EXPECT_THROW(forward_full(p, small, 31, 40), ShapeError);
}

TEST(Network, DeterministicForFixedSeed) {
  auto p = init_params(5);
  Rng rng(9);
  auto w = random_image(rng, 32, 32);
  EXPECT_EQ(forward_window(p, w, ForwardMode::train(7)), forward_window(p, w, ForwardMode::train(7)));
  EXPECT_EQ(forward_window(p, w), forward_window(p, w));
}

TEST(Network, FullMapShapeAndDegenerateCase) {
  auto p = init_params(11);
  Rng rng(12);
  randomize_running_stats(p, rng);
  auto img = random_image(rng, 110, 110);
  auto map = forward_full(p, img, 110, 110);
  EXPECT_EQ(map.height, 40);
  EXPECT_EQ(map.width, 40);
  auto win = random_image(rng, 32, 32);
  auto one = forward_full(p, win, 32, 32);
  ASSERT_EQ(one.height, 1);
  auto direct = forward_window(p, win);
  for (int d = 0; d < 3; ++d) EXPECT_EQ(one.at(d, 0, 0), direct[d]);
}

TEST(Network, MatchesSerialReference) {
  auto p = init_params(21);
  Rng rng(22);
  randomize_running_stats(p, rng);
  auto img = random_image(rng, 40, 44);
  auto fast = forward_full(p, img, 40, 44);
  auto ref = reference::forward(p, img, 40, 44);
  ASSERT_EQ(fast.probs.size(), ref.probs.size());
  for (std::size_t i = 0; i < ref.probs.size(); ++i) EXPECT_NEAR(fast.probs[i], ref.probs[i], 1e-5);
}

TEST(Network, FullyConvolutionalEquivalenceOnSmallImage) {
  auto p = init_params(31);
  Rng rng(32);
  randomize_running_stats(p, rng);
  const int h = 40, w = 44;
  auto img = random_image(rng, h, w);
  auto map = forward_full(p, img, h, w);
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c) {
      std::vector<float> win(32 * 32);
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) win[y * 32 + x] = img[(2 * r + y) * w + 2 * c + x];
      auto o = forward_window(p, win);
      for (int d = 0; d < 3; ++d) EXPECT_NEAR(map.at(d, r, c), o[d], 1e-5);
    }
}

TEST(Loss, SingleSampleAtOneHalfIsLn2) {
  auto p = zero_params<double>();
  BasicTrainBatch<double> b;
  b.windows.assign(32 * 32, 0.0);
  b.d_index = {1};
  b.rewards = {1.0};
  b.weights = {1.0};
  auto loss = loss_and_gradient(p, b, ForwardMode::infer(), 1e-4);
  EXPECT_NEAR(loss.cross_entropy, std::log(2.0), 1e-15);
  EXPECT_EQ(loss.regularizer, 0.0);
}

TEST(Loss, DoublingWeightsDoublesCrossEntropy) {
  auto p = init_params(41).cast<double>();
  Rng rng(42);
  auto b = random_batch(rng, 5);
  auto l1 = loss_and_gradient(p, b, ForwardMode::infer(), 1e-4);
  for (auto& w : b.weights) w *= 2;
  auto l2 = loss_and_gradient(p, b, ForwardMode::infer(), 1e-4);
  EXPECT_NEAR(l2.cross_entropy, 2 * l1.cross_entropy, 1e-12 * l1.cross_entropy);
  EXPECT_EQ(l1.regularizer, l2.regularizer);
}

TEST(Loss, PerfectPredictionsLeaveOnlyRegularizer) {
  auto p = zero_params<double>();
  p.layers[4].bias = {40.0, 40.0, 40.0};
  p.layers[0].kernel[0] = 0.5;
  BasicTrainBatch<double> b;
  b.windows.assign(32 * 32, 0.0);
  b.d_index = {0};
  b.rewards = {1.0};
  b.weights = {1.0};
  auto loss = loss_and_gradient(p, b, ForwardMode::infer(), 1e-4);
  EXPECT_LT(loss.cross_entropy, 1e-15);
  EXPECT_NEAR(loss.regularizer, 1e-4 * 0.3 * 0.25, 1e-18);
}

TEST(Loss, OnlyAttemptedOpeningReceivesGradient) {
  auto p = init_params(51).cast<double>();
  Rng rng(52);
  auto b = random_batch(rng, 1);
  b.d_index = {2};
  BasicParams<double> g;
  loss_and_gradient(p, b, ForwardMode::infer(), 0.0, &g);
  const int k4 = 142;
  for (int d = 0; d < 2; ++d) {
    EXPECT_EQ(g.layers[4].bias[d], 0.0);
    for (int c = 0; c < k4; ++c) EXPECT_EQ(g.layers[4].kernel[d * k4 + c], 0.0);
  }
  EXPECT_NE(g.layers[4].bias[2], 0.0);
}

namespace {

std::vector<bool> relu_pattern(const ForwardPass<double>& pass) {
  std::vector<bool> on;
  for (const auto& layer : pass.layers)
    for (double a : layer.act) on.push_back(a > 0);
  return on;
}

// Central differences (eps = 1e-4) on randomly probed parameters of every trainable tensor.
// A probe whose +-eps evaluations switch some ReLU is redrawn: across a kink the difference
// quotient is not an estimate of the derivative at the probe point.
double max_gradient_error(const ForwardMode& mode, std::uint64_t seed, int per_tensor, int* redrawn) {
  auto p = init_params(seed).cast<double>();
  Rng rng(seed + 1);
  randomize_running_stats(p, rng);
  auto batch = random_batch(rng, 3);
  const double l2 = 1e-2;
  const double eps = 1e-4;
  BasicParams<double> grad;
  loss_and_gradient(p, batch, mode, l2, &grad);

  double worst = 0;
  int probed = 0;
  *redrawn = 0;
  for (int l = 0; l < kLayerCount; ++l) {
    auto& lp = p.layers[l];
    auto& lg = grad.layers[l];
    std::vector<std::pair<std::vector<double>*, std::vector<double>*>> tensors{
        {&lp.kernel, &lg.kernel}, {&lp.bias, &lg.bias}, {&lp.gamma, &lg.gamma}, {&lp.beta, &lg.beta}};
    for (auto [t, g] : tensors) {
      if (t->empty()) continue;
      for (int s = 0; s < per_tensor;) {
        const std::size_t i = uniform_below(rng, t->size());
        const double keep = (*t)[i];
        ForwardPass<double> pass_up, pass_down;
        (*t)[i] = keep + eps;
        const double up = loss_and_gradient(p, batch, mode, l2, static_cast<BasicParams<double>*>(nullptr), &pass_up).total;
        (*t)[i] = keep - eps;
        const double down = loss_and_gradient(p, batch, mode, l2, static_cast<BasicParams<double>*>(nullptr), &pass_down).total;
        (*t)[i] = keep;
        if (relu_pattern(pass_up) != relu_pattern(pass_down)) {
          ++*redrawn;
          continue;
        }
        const double numeric = (up - down) / (2 * eps);
        const double analytic = (*g)[i];
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        worst = std::max(worst, std::abs(numeric - analytic) / scale);
        ++probed;
        ++s;
      }
    }
  }
  EXPECT_GE(probed, 200);
  return worst;
}

}  // namespace

TEST(Gradient, MatchesFiniteDifferencesWithFixedDropout) {
  ForwardMode mode;
  mode.dropout = true;
  mode.dropout_seed = 77;
  int redrawn = 0;
  EXPECT_LE(max_gradient_error(mode, 61, 20, &redrawn), 1e-4);
  EXPECT_LT(redrawn, 20);
}

TEST(Gradient, MatchesFiniteDifferencesWithBatchStatistics) {
  int redrawn = 0;
  EXPECT_LE(max_gradient_error(ForwardMode::train(78), 71, 16, &redrawn), 1e-4);
  EXPECT_LT(redrawn, 20);
}

TEST(Training, ZeroLearningRateLeavesParametersUnchanged) {
  auto p = init_params(81);
  const auto before = p;
  SgdMomentum opt;
  opt.learning_rate = 0;
  Rng rng(82);
  auto bd = random_batch(rng, 4);
  TrainBatch b{std::vector<float>(bd.windows.begin(), bd.windows.end()), bd.d_index,
               std::vector<float>(bd.rewards.begin(), bd.rewards.end()),
               std::vector<float>(bd.weights.begin(), bd.weights.end())};
  train_step(p, opt, b, 1, 1e-4);
  for (int l = 0; l < kLayerCount; ++l) {
    EXPECT_EQ(p.layers[l].kernel, before.layers[l].kernel);
    EXPECT_EQ(p.layers[l].gamma, before.layers[l].gamma);
    EXPECT_EQ(p.layers[l].bias, before.layers[l].bias);
  }
}

TEST(Training, SmallStepDecreasesSampleLoss) {
  auto p = init_params(91).cast<double>();
  Rng rng(92);
  auto b = random_batch(rng, 1);
  const ForwardMode mode;
  BasicParams<double> g;
  const double before = loss_and_gradient(p, b, mode, 1e-4, &g).total;
  for (int l = 0; l < kLayerCount; ++l) {
    auto step = [](std::vector<double>& w, const std::vector<double>& dw) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= 1e-3 * dw[i];
    };
    step(p.layers[l].kernel, g.layers[l].kernel);
    step(p.layers[l].bias, g.layers[l].bias);
    step(p.layers[l].gamma, g.layers[l].gamma);
    step(p.layers[l].beta, g.layers[l].beta);
  }
  EXPECT_LT(loss_and_gradient(p, b, mode, 1e-4).total, before);
}

TEST(Training, NonFiniteStepIsRejectedAndParamsKept) {
  auto p = init_params(95);
  p.layers[4].bias[0] = std::numeric_limits<float>::quiet_NaN();
  const auto before = p;
  SgdMomentum opt;
  TrainBatch b{std::vector<float>(32 * 32, 0.1f), {0}, {1.0f}, {1.0f}};
  EXPECT_THROW(train_step(p, opt, b, 1, 1e-4), NonFiniteError);
  EXPECT_EQ(encode_snapshot(p), encode_snapshot(before));
}

TEST(Training, LearnsASeparableToyProblem) {
  auto p = init_params(97);
  SgdMomentum opt;
  Rng rng(98);
  TrainBatch b;
  for (int i = 0; i < 32; ++i) {
    const bool pos = i % 2 == 0;
    for (int k = 0; k < 32 * 32; ++k) {
      const int y = k / 32, x = k % 32;
      const bool bump = std::abs(y - 15.5) < 5 && std::abs(x - 15.5) < 3;
      b.windows.push_back(static_cast<float>((pos && bump ? 0.5 : 0.0) + 0.05 * (uniform01(rng) - 0.5)));
    }
    b.d_index.push_back(1);
    b.rewards.push_back(pos ? 1.0f : 0.0f);
    b.weights.push_back(1.0f);
  }
  double first = 0, last = 0;
  for (int step = 0; step < 60; ++step) {
    auto r = train_step(p, opt, b, step, 1e-4);
    if (step == 0) first = r.loss.cross_entropy;
    last = r.loss.cross_entropy;
  }
  EXPECT_LT(last, 0.5 * first);
}

TEST(Snapshot, RoundTripIsBitExact) {
  auto p = init_params(101);
  Rng rng(102);
  randomize_running_stats(p, rng);
  const auto bytes = encode_snapshot(p);
  const auto q = decode_snapshot(bytes);
  EXPECT_EQ(encode_snapshot(q), bytes);
  EXPECT_TRUE(p == q);
}

TEST(Snapshot, RejectsCorruptHeader) {
  auto bytes = encode_snapshot(init_params(1));
  bytes[0] = 'X';
  EXPECT_THROW(decode_snapshot(bytes), SnapshotFormatError);
  auto trunc = encode_snapshot(init_params(1));
  trunc.resize(trunc.size() - 3);
  EXPECT_THROW(decode_snapshot(trunc), SnapshotFormatError);
}

TEST(Snapshot, StorePublishesMonotoneIdsAndRestores) {
  const auto dir = std::filesystem::temp_directory_path() / "grasplab_snapshot_test";
  std::filesystem::remove_all(dir);
  SnapshotStore store(dir);
  EXPECT_FALSE(store.latest().has_value());
  const auto a = store.publish(init_params(1));
  const auto b = store.publish(init_params(2));
  EXPECT_LT(a, b);
  EXPECT_EQ(store.latest()->first, b);
  EXPECT_TRUE(*store.restore(a) == init_params(1));
  EXPECT_THROW(store.restore(999), UnknownSnapshot);

  SnapshotStore reopened(dir);
  EXPECT_TRUE(*reopened.restore(b) == init_params(2));
  EXPECT_GT(reopened.publish(init_params(3)), b);
  std::filesystem::remove_all(dir);
}

TEST(Snapshot, ConcurrentReadersAgree) {
  SnapshotStore store;
  const auto id = store.publish(init_params(5));
  Rng rng(6);
  auto w = random_image(rng, 32, 32);
  std::array<std::array<float, 3>, 4> out{};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&, t] { out[t] = forward_window(*store.restore(id), w); });
  for (auto& t : threads) t.join();
  for (int t = 1; t < 4; ++t) EXPECT_EQ(out[t], out[0]);
}
