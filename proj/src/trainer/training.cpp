#include "grasplab/trainer/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "grasplab/core/random.hpp"

namespace grasplab::trainer {

const std::array<float, image::kWindowPixels>& WindowCache::get(const std::string& hash) {
  auto it = windows_.find(hash);
  if (it == windows_.end()) it = windows_.emplace(hash, log_->load_window(hash).values).first;
  return it->second;
}

TrainingData build_training_data(const std::vector<dataset::GraspAttempt>& attempts, WindowCache& cache) {
  TrainingData data;
  for (const auto& a : attempts) {
    Sample s;
    s.window = cache.get(a.window_hash);
    s.d_index = a.index.k_d;
    s.reward = a.reward;
    (dataset::assign_split(a.timestamp) == dataset::Split::test ? data.test : data.train).push_back(s);
  }
  return data;
}

void append_training_data(TrainingData& into, const TrainingData& more) {
  into.train.insert(into.train.end(), more.train.begin(), more.train.end());
  into.test.insert(into.test.end(), more.test.begin(), more.test.end());
}

namespace {

constexpr int kEvalChunk = 256;

net::TrainBatch make_batch(std::span<const Sample> all, std::span<const std::size_t> idx,
                           std::span<const double> weights) {
  net::TrainBatch b;
  b.windows.reserve(idx.size() * image::kWindowPixels);
  for (auto i : idx) {
    const auto& s = all[i];
    b.windows.insert(b.windows.end(), s.window.begin(), s.window.end());
    b.d_index.push_back(s.d_index);
    b.rewards.push_back(static_cast<float>(s.reward));
    b.weights.push_back(static_cast<float>(weights[i]));
  }
  return b;
}

std::vector<int> rewards_of(std::span<const Sample> s) {
  std::vector<int> r(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) r[i] = s[i].reward;
  return r;
}

bool has_both_classes(const std::vector<int>& r) {
  const auto pos = std::count(r.begin(), r.end(), 1);
  return pos > 0 && pos < static_cast<long>(r.size());
}

// Stacks consecutive samples into one input tensor.
std::vector<float> stack_windows(std::span<const Sample> s) {
  std::vector<float> x;
  x.reserve(s.size() * image::kWindowPixels);
  for (const auto& v : s) x.insert(x.end(), v.window.begin(), v.window.end());
  return x;
}

}  // namespace

std::vector<double> predict(const net::NetworkParams& p, std::span<const Sample> samples) {
  std::vector<double> psi(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += kEvalChunk) {
    const auto chunk = samples.subspan(start, std::min<std::size_t>(kEvalChunk, samples.size() - start));
    const auto x = stack_windows(chunk);
    const int b = static_cast<int>(chunk.size());
    const auto pass = net::forward<float>(p, x, b, image::kWindowSize, image::kWindowSize, net::ForwardMode::infer());
    for (int k = 0; k < b; ++k) psi[start + k] = pass.prob(chunk[k].d_index, k);
  }
  return psi;
}

TestMetrics test_metrics(const net::NetworkParams& p, std::span<const Sample> samples, double kappa) {
  TestMetrics m;
  m.samples = samples.size();
  if (samples.empty()) return m;
  const auto psi = predict(p, samples);
  const auto r = rewards_of(samples);
  std::vector<double> w(samples.size(), 1.0);
  if (has_both_classes(r)) w = dataset::product_weights(r, kappa);
  double loss = 0;
  std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double q = std::clamp(psi[i], 1e-7, 1 - 1e-7);
    loss += w[i] * (r[i] ? -std::log(q) : -std::log(1 - q));
    const bool pred = psi[i] >= 0.5;
    correct += pred == (r[i] == 1);
    tp += pred && r[i];
    fp += pred && !r[i];
    fn += !pred && r[i];
  }
  m.loss = loss / static_cast<double>(samples.size());
  m.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  m.f1 = tp == 0 ? 0.0 : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  return m;
}

void recalibrate_batch_norm(net::NetworkParams& p, std::span<const Sample> samples, std::uint64_t seed,
                            int max_samples) {
  if (samples.empty()) return;
  std::vector<std::size_t> pick(samples.size());
  std::iota(pick.begin(), pick.end(), 0);
  if (static_cast<int>(pick.size()) > max_samples) {
    Rng rng(derive_seed(seed, {0xbca1}));
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(max_samples);
    std::sort(pick.begin(), pick.end());
  }
  std::vector<Sample> subset;
  subset.reserve(pick.size());
  for (auto i : pick) subset.push_back(samples[i]);

  for (int l = 0; l < net::kLayerCount; ++l) {
    if (!net::kLayerTable[l].batch_norm) continue;
    const int c = net::kLayerTable[l].out_channels;
    std::vector<double> sum(c, 0.0), sq(c, 0.0);
    std::size_t count = 0;
    for (std::size_t start = 0; start < subset.size(); start += kEvalChunk) {
      const std::span<const Sample> chunk(subset.data() + start, std::min<std::size_t>(kEvalChunk, subset.size() - start));
      const auto x = stack_windows(chunk);
      const auto pass = net::forward<float>(p, x, static_cast<int>(chunk.size()), image::kWindowSize,
                                            image::kWindowSize, net::ForwardMode::infer());
      const auto& pre = pass.layers[l].pre;
      const std::size_t n = pre.size() / c;
      for (int ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < n; ++i) {
          const double v = pre[ch * n + i];
          sum[ch] += v;
          sq[ch] += v * v;
        }
      count += n;
    }
    for (int ch = 0; ch < c; ++ch) {
      const double mean = sum[ch] / count;
      p.layers[l].running_mean[ch] = static_cast<float>(mean);
      p.layers[l].running_var[ch] = static_cast<float>(std::max(0.0, sq[ch] / count - mean * mean));
    }
  }
}

TrainResult train(net::NetworkParams& p, net::SgdMomentum& opt, const TrainingData& data, const TrainOptions& o,
                  std::span<const double> extra_weights) {
  const auto r = rewards_of(data.train);
  auto weights = dataset::product_weights(r, o.kappa);
  if (!extra_weights.empty()) {
    if (extra_weights.size() != weights.size()) throw std::invalid_argument("extra weights do not match train split");
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] *= extra_weights[i];
  }

  TrainResult result;
  net::NetworkParams best = p;
  net::SgdMomentum best_opt = opt;
  double best_loss = INFINITY;
  int since_best = 0;
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < o.max_epochs; ++epoch) {
    Rng rng(derive_seed(o.seed, {0xe90c, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t seen = 0;
    try {
      for (std::size_t start = 0; start < order.size(); start += o.batch_size) {
        const std::span<const std::size_t> idx(order.data() + start,
                                               std::min<std::size_t>(o.batch_size, order.size() - start));
        const auto batch = make_batch(data.train, idx, weights);
        const auto step = net::train_step(p, opt, batch, derive_seed(o.seed, {0xd0, static_cast<std::uint64_t>(epoch), start}),
                                          o.l2_scale);
        loss_sum += step.loss.total * static_cast<double>(idx.size());
        seen += idx.size();
      }
    } catch (const net::NonFiniteError&) {
      result.diverged = true;
      break;
    }
    recalibrate_batch_norm(p, data.train, derive_seed(o.seed, {0xca1, static_cast<std::uint64_t>(epoch)}),
                           o.recalibration_samples);
    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    em.test = test_metrics(p, data.test, o.kappa);
    result.history.push_back(em);
    // Without a test split every epoch counts as an improvement.
    if (data.test.empty() || em.test.loss < best_loss) {
      best_loss = em.test.loss;
      best = p;
      best_opt = opt;
      result.best_epoch = epoch;
      result.best = em.test;
      since_best = 0;
    } else if (++since_best >= o.patience) {
      break;
    }
  }
  p = std::move(best);
  opt = std::move(best_opt);
  return result;
}

TrainResult retrain_weighted(net::NetworkParams& p, net::SgdMomentum& opt, const TrainingData& data,
                             const TrainOptions& o, std::vector<double>* weights_out) {
  const net::NetworkParams frozen = p;
  const auto psi = predict(frozen, data.train);
  const auto w = dataset::retrain_weights(rewards_of(data.train), psi);
  if (weights_out) *weights_out = w;
  return train(p, opt, data, o, w);
}

}  // namespace grasplab::trainer
