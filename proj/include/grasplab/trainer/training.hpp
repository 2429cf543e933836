#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "grasplab/dataset/dataset.hpp"
#include "grasplab/net/network.hpp"

namespace grasplab::trainer {

struct Sample {
  std::array<float, image::kWindowPixels> window{};
  int d_index = 0;
  int reward = 0;
};

struct TrainingData {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

// Loads windows from a log once and keeps them in memory.
class WindowCache {
 public:
  explicit WindowCache(const dataset::AttemptLog& log) : log_(&log) {}
  const std::array<float, image::kWindowPixels>& get(const std::string& hash);

 private:
  const dataset::AttemptLog* log_;
  std::unordered_map<std::string, std::array<float, image::kWindowPixels>> windows_;
};

// Splits by timestamp hash only.
TrainingData build_training_data(const std::vector<dataset::GraspAttempt>& attempts, WindowCache& cache);
void append_training_data(TrainingData& into, const TrainingData& more);

struct TestMetrics {
  double loss = 0;  // cross entropy weighted like training (balance x asymmetry), unweighted if one class
  double accuracy = 0;
  double f1 = 0;
  std::size_t samples = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0;
  TestMetrics test;
};

struct TrainOptions {
  int max_epochs = 40;
  int patience = 5;
  int batch_size = 128;
  double l2_scale = 1e-4;
  double kappa = 2.0;
  std::uint64_t seed = 1;
  int recalibration_samples = 1024;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  int best_epoch = -1;  // -1: parameters unchanged
  bool diverged = false;
  TestMetrics best;
};

// psi at the attempted opening, infer mode.
std::vector<double> predict(const net::NetworkParams& p, std::span<const Sample> samples);

TestMetrics test_metrics(const net::NetworkParams& p, std::span<const Sample> samples, double kappa);

// Sets batch-norm running statistics to the exact infer-mode statistics of (a deterministic
// subset of) the samples, layer by layer.
void recalibrate_batch_norm(net::NetworkParams& p, std::span<const Sample> samples, std::uint64_t seed,
                            int max_samples = 1024);

// Minibatch SGD on data.train with product weights (times extra_weights when given); test-split
// metrics after every epoch; stops after `patience` epochs without a new best test loss and
// leaves the best parameters in `p`. A non-finite step ends training with the last good parameters.
// Throws dataset::SingleClassError when the train split lacks a class.
TrainResult train(net::NetworkParams& p, net::SgdMomentum& opt, const TrainingData& data, const TrainOptions& o,
                  std::span<const double> extra_weights = {});

// Retrain weights from a frozen copy of p, then continued training with them.
TrainResult retrain_weighted(net::NetworkParams& p, net::SgdMomentum& opt, const TrainingData& data,
                             const TrainOptions& o, std::vector<double>* weights_out = nullptr);

}  // namespace grasplab::trainer
