#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "grasplab/dataset/dataset.hpp"
#include "grasplab/net/snapshot.hpp"
#include "grasplab/policy/policy.hpp"
#include "grasplab/sim/simulator.hpp"
#include "grasplab/trainer/config.hpp"
#include "grasplab/trainer/schedule.hpp"
#include "grasplab/trainer/training.hpp"

namespace grasplab::trainer {

// Self-supervised data collection: one grasp attempt per step on a persistent bin.
class Collector {
 public:
  Collector(const Config& c, std::uint64_t first_scene_id);

  // Runs attempt number `seq` with the given snapshot and appends it to the log.
  dataset::GraspAttempt step(const net::NetworkParams& params, net::SnapshotId snapshot_id, dataset::AttemptLog& log,
                             long seq);

  std::uint64_t scenes_spawned() const { return scenes_spawned_; }
  const sim::Scene& scene() const { return scene_; }

 private:
  void respawn();
  void invalidate();
  const image::DepthImage& depth();
  const image::DepthImage& rotated(int k);

  Config config_;
  sim::GraspConfig grasp_;
  sim::ObjectSpec spec_;
  ExplorationSchedule schedule_;
  std::uint64_t next_scene_id_;
  std::uint64_t scene_id_ = 0;
  std::uint64_t scenes_spawned_ = 0;
  sim::Scene scene_;
  bool have_scene_ = false;
  int attempts_on_scene_ = 0;
  std::vector<int> excluded_;

  // Cached views of the current scene.
  std::optional<image::DepthImage> depth_;
  policy::Observation obs_;
  std::vector<bool> rotated_ready_;
  std::optional<policy::ValueMap> map_;
};

struct MetricsRow {
  long attempts = 0;
  double loss = 0;
  double accuracy = 0;
  double f1 = 0;
  double grasp_rate = 0;  // collection success rate since the previous row
};

struct PipelineResult {
  net::SnapshotId final_snapshot = 0;
  std::filesystem::path final_snapshot_path;
  std::vector<MetricsRow> metrics;
  long attempts = 0;
  TrainResult final_training;
};

// Collect/train loop writing <out>/log, <out>/snapshots, <out>/metrics.csv and <out>/final.snapshot.
// An existing <out> is resumed: numbering continues after the logged attempts and the newest snapshot.
// `initial` replaces the random initialization of a fresh run.
PipelineResult run_pipeline(const Config& c, const std::filesystem::path& out,
                            const net::NetworkParams* initial = nullptr);

// Training data of the run in `out` plus every prior log listed in the config.
TrainingData load_training_data(const Config& c, const std::filesystem::path& log_dir);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

TrainOptions train_options(const Config& c, int epochs, std::uint64_t round);

}  // namespace grasplab::trainer
