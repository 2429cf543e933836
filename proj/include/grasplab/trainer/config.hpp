#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "grasplab/sim/scene.hpp"
#include "grasplab/sim/simulator.hpp"

namespace grasplab::trainer {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Config {
  std::uint64_t seed = 1;

  // Scenes
  int objects = 10;
  std::string object_kind = "cylinder";  // cylinder | cube
  double cylinder_diameter_mm = 15.0;
  double cylinder_height_mm = 60.0;
  double cube_edge_mm = 25.0;
  double p_upright = 0.5;
  double speckle_probability = 0.0;
  int max_attempts_per_scene = 300;

  // Grasp physics
  std::string train_clamp_mode = "training_reduced";  // training_reduced | application
  std::string eval_clamp_mode = "application";
  double min_clamp_width_mm = 5.0;
  double approach_retract_mm = 5.0;
  double finger_width_mm = 10.0;
  double finger_thickness_mm = 5.0;
  double stability_fraction = 0.25;
  double p_flip = 0.0;
  bool displace_on_failure = false;
  double probe_radius_mm = 4.0;
  double descent_offset_mm = 10.0;

  // Collection schedule
  int attempts = 5000;
  int random_phase = 1000;
  double mix_random = 1440;
  double mix_probabilistic = 8830;
  double mix_uncertain = 1300;
  double mix_maximum = 9430;
  int mix_maximum_n = 5;

  // Network training
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 128;
  double l2_scale = 1e-4;
  double kappa = 2.0;
  int patience = 5;
  int max_epochs = 40;
  int train_interval = 250;   // attempts between training rounds
  int round_epochs = 3;       // epochs per interleaved round
  bool warm_start = true;
  int retrain_epochs = 10;
  bool threaded = false;
  // Extra attempt-log directories whose data joins training (e.g. a source task), comma separated.
  std::string prior_logs;
  // Attempt number the exploration schedule starts counting from.
  int schedule_offset = 0;

  // Evaluation
  int eval_n = 10;
  int eval_m = 20;
  int eval_trials = 100;
  int failure_budget = 2;  // consecutive full-plan failures ending a trial
  double nominal_attempt_s = 10.0;
  std::uint64_t eval_seed = 1000003;

  sim::ObjectSpec object_spec() const;
  sim::GraspConfig grasp_config(bool evaluation) const;
  sim::SpawnOptions spawn_options() const;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

// "key = value" lines; '#' starts a comment. Unknown keys and malformed values throw.
Config parse_config(const std::string& text, Config base = {});
Config load_config(const std::filesystem::path& path, Config base = {});
std::string to_text(const Config& c);

}  // namespace grasplab::trainer
