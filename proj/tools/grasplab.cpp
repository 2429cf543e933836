// grasplab command line: collect | train | retrain | eval | infer | pipeline

#include <CLI11.hpp>
#include <malloc.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "grasplab/dataset/dataset.hpp"
#include "grasplab/image/heightmap_io.hpp"
#include "grasplab/image/pgm.hpp"
#include "grasplab/net/network.hpp"
#include "grasplab/net/snapshot.hpp"
#include "grasplab/policy/policy.hpp"
#include "grasplab/sim/simulator.hpp"
#include "grasplab/trainer/config.hpp"
#include "grasplab/trainer/evaluation.hpp"
#include "grasplab/trainer/pipeline.hpp"
#include "grasplab/trainer/training.hpp"

namespace fs = std::filesystem;
using namespace grasplab;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  long attempts = -1;
  int objects = -1;
  std::string protocol;
  std::string snapshot;
  std::string out = "grasplab_out";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value configuration file");
  app->add_option("--seed", c.seed, "random seed (overrides config)");
  app->add_option("--attempts", c.attempts, "number of grasp attempts (overrides config)");
  app->add_option("--objects", c.objects, "objects per bin (overrides config)");
  app->add_option("--protocol", c.protocol, "evaluation protocol n:m:trials");
  app->add_option("--snapshot", c.snapshot, "network snapshot file");
  app->add_option("--out", c.out, "output directory");
}

trainer::Config make_config(const Common& c) {
  trainer::Config cfg = c.config.empty() ? trainer::Config{} : trainer::load_config(c.config);
  if (c.seed) cfg.seed = c.seed;
  if (c.attempts >= 0) cfg.attempts = static_cast<int>(c.attempts);
  if (c.objects >= 0) cfg.objects = c.objects;
  if (!c.protocol.empty()) {
    const auto p = trainer::EvalProtocol::parse(c.protocol);
    cfg.eval_n = p.n;
    cfg.eval_m = p.m;
    cfg.eval_trials = p.trials;
  }
  cfg.validate();
  return cfg;
}

net::NetworkParams params_from(const Common& c, const trainer::Config& cfg) {
  return c.snapshot.empty() ? net::init_params(cfg.seed) : net::load_snapshot(c.snapshot);
}

void print_history(const trainer::TrainResult& r) {
  for (const auto& e : r.history)
    std::printf("epoch %3d  train loss %.5f  test loss %.5f  acc %.4f  f1 %.4f\n", e.epoch, e.train_loss, e.test.loss,
                e.test.accuracy, e.test.f1);
  std::printf("best epoch %d%s\n", r.best_epoch, r.diverged ? " (stopped: non-finite step)" : "");
}

int cmd_collect(const Common& c) {
  const auto cfg = make_config(c);
  const auto params = params_from(c, cfg);
  net::SnapshotStore store(fs::path(c.out) / "snapshots");
  const auto id = store.publish(params);
  dataset::AttemptLog log(fs::path(c.out) / "log");
  const long start = static_cast<long>(log.size());
  long first_scene = 0;
  for (const auto& a : log.load_all()) first_scene = std::max<long>(first_scene, static_cast<long>(a.scene_id) + 1);
  trainer::Collector collector(cfg, static_cast<std::uint64_t>(first_scene));
  long successes = 0;
  for (long s = start; s < start + cfg.attempts; ++s) successes += collector.step(params, id, log, s).reward;
  std::printf("collected %d attempts, %ld successes (%.4f)\n", cfg.attempts, successes,
              cfg.attempts ? static_cast<double>(successes) / cfg.attempts : 0.0);
  return 0;
}

int cmd_train(const Common& c) {
  const auto cfg = make_config(c);
  auto params = params_from(c, cfg);
  const auto data = trainer::load_training_data(cfg, fs::path(c.out) / "log");
  std::printf("train %zu / test %zu samples\n", data.train.size(), data.test.size());
  net::SgdMomentum opt{cfg.learning_rate, cfg.momentum, {}};
  const auto r = trainer::train(params, opt, data, trainer::train_options(cfg, cfg.max_epochs, 0));
  print_history(r);
  net::save_snapshot(params, fs::path(c.out) / "final.snapshot");
  return 0;
}

int cmd_retrain(const Common& c) {
  const auto cfg = make_config(c);
  if (c.snapshot.empty()) throw std::invalid_argument("retrain needs --snapshot");
  auto params = net::load_snapshot(c.snapshot);
  const auto data = trainer::load_training_data(cfg, fs::path(c.out) / "log");
  net::SgdMomentum opt{cfg.learning_rate, cfg.momentum, {}};
  std::vector<double> w;
  const auto r = trainer::retrain_weighted(params, opt, data, trainer::train_options(cfg, cfg.retrain_epochs, 0x5e7), &w);
  print_history(r);
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  if (!w.empty()) std::printf("retrain weights in [%.4f, %.4f]\n", *lo, *hi);
  net::save_snapshot(params, fs::path(c.out) / "retrained.snapshot");
  return 0;
}

int cmd_eval(const Common& c) {
  const auto cfg = make_config(c);
  const auto params = params_from(c, cfg);
  trainer::EvalProtocol p{cfg.eval_n, cfg.eval_m, cfg.eval_trials, cfg.failure_budget};
  const auto r = trainer::evaluate_grasp_rate(params, p, cfg, cfg.eval_seed);
  std::printf("%s\n", trainer::format_report(r).c_str());
  return 0;
}

int cmd_infer(const Common& c) {
  const auto cfg = make_config(c);
  const auto params = params_from(c, cfg);
  const fs::path out(c.out);
  fs::create_directories(out);
  const auto scene = sim::spawn_scene(cfg.objects, cfg.object_spec(), cfg.seed, cfg.spawn_options());
  const auto depth = sim::render_depth(scene);
  image::save_heightmap(depth, out / "overview.hm", cfg.seed);
  image::write_pgm_scaled(out / "overview.pgm", depth.width(), depth.height(), depth.data(), 0.0f, 80.0f);
  {
    std::ofstream f(out / "scene.txt");
    sim::write_scene(f, scene);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto obs = policy::observe(depth);
  const auto map = policy::evaluate(params, obs);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  policy::dump_value_map(map, out / "heatmaps", "psi");
  Rng rng(cfg.seed);
  const auto g = policy::select_maximum(map, 1, rng);
  const auto win = policy::cell_window(obs, g);
  image::write_pgm_scaled(out / "window.pgm", image::kWindowSize, image::kWindowSize, win.values, 0.0f, 1.0f);
  const auto grasp = cfg.grasp_config(true);
  const auto pose = sim::with_height(depth, index_to_pose(g), grasp);
  const auto outcome = sim::evaluate_grasp(scene, pose, grasp);
  std::printf("value map in %.1f ms; best cell k=%d i=%d j=%d d=%d psi=%.4f\n", ms, g.k_rot, g.i, g.j, g.k_d,
              map.at(g));
  std::printf("pose x=%.1f y=%.1f a=%.3f z=%.1f opening=%.0f mm -> %s\n", pose.x, pose.y, pose.a, pose.z,
              grasp.jaw_openings_mm[g.k_d], outcome.reward ? "success" : sim::to_string(outcome.failure_cause).c_str());
  return 0;
}

int cmd_pipeline(const Common& c) {
  const auto cfg = make_config(c);
  std::unique_ptr<net::NetworkParams> initial;
  if (!c.snapshot.empty()) initial = std::make_unique<net::NetworkParams>(net::load_snapshot(c.snapshot));
  const auto r = trainer::run_pipeline(cfg, c.out, initial.get());
  for (const auto& m : r.metrics)
    std::printf("%6ld attempts  loss %.5f  acc %.4f  f1 %.4f  collect rate %.4f\n", m.attempts, m.loss, m.accuracy,
                m.f1, m.grasp_rate);
  std::printf("final snapshot %s\n", r.final_snapshot_path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // Training allocates tens of MB per minibatch; keep those pages in the heap instead of
  // mapping and unmapping them on every step.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  CLI::App app{"grasplab: data-efficient grasp learning in a simulated bin"};
  app.require_subcommand(1);
  Common common;
  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const Common&);
  };
  const Entry entries[] = {
      {"collect", "collect grasp attempts with a fixed network", cmd_collect},
      {"train", "train on the attempt log in --out", cmd_train},
      {"retrain", "weighted retraining of --snapshot on the log in --out", cmd_retrain},
      {"eval", "n-of-m grasp rate of --snapshot", cmd_eval},
      {"infer", "value map, heatmaps and best grasp for one scene", cmd_infer},
      {"pipeline", "interleaved collection and training", cmd_pipeline},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> subs;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    add_common(sub, common);
    subs.emplace_back(sub, &e);
  }
  CLI11_PARSE(app, argc, argv);
  try {
    for (auto& [sub, e] : subs)
      if (sub->parsed()) return e->run(common);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "grasplab: %s\n", ex.what());
    return 1;
  }
  return 0;
}
