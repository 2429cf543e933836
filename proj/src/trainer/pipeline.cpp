#include "grasplab/trainer/pipeline.hpp"

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "grasplab/core/random.hpp"
#include "grasplab/net/network.hpp"

namespace grasplab::trainer {

Collector::Collector(const Config& c, std::uint64_t first_scene_id)
    : config_(c),
      grasp_(c.grasp_config(false)),
      spec_(c.object_spec()),
      schedule_(ExplorationSchedule::from_config(c)),
      next_scene_id_(first_scene_id) {}

void Collector::invalidate() {
  depth_.reset();
  map_.reset();
  obs_ = {};
  rotated_ready_.assign(kRotations, false);
  excluded_.clear();
}

void Collector::respawn() {
  // A bin that cannot be filled is skipped in favor of the next scene id.
  for (int tries = 0;; ++tries) {
    scene_id_ = next_scene_id_++;
    try {
      scene_ = sim::spawn_scene(config_.objects, spec_, derive_seed(config_.seed, {0x5ce, scene_id_}),
                                config_.spawn_options());
      break;
    } catch (const sim::PlacementError& e) {
      std::cerr << "skipping scene " << scene_id_ << ": " << e.what() << '\n';
      if (tries > 100) throw;
    }
  }
  ++scenes_spawned_;
  have_scene_ = true;
  attempts_on_scene_ = 0;
  invalidate();
}

const image::DepthImage& Collector::depth() {
  if (!depth_) {
    sim::RenderOptions ro;
    ro.speckle_probability = config_.speckle_probability;
    ro.speckle_seed = derive_seed(scene_.rng_seed, {0x59ec, scene_.attempts});
    depth_ = sim::render_depth(scene_, ro);
    obs_.image = image::pad_for_inference(*depth_);
    obs_.reference = image::reference_level(obs_.image);
    obs_.rotated.assign(kRotations, {});
    rotated_ready_.assign(kRotations, false);
  }
  return *depth_;
}

const image::DepthImage& Collector::rotated(int k) {
  depth();
  if (!rotated_ready_[k]) {
    obs_.rotated[k] = image::rotate_about_center(obs_.image, rotation_angle(k));
    rotated_ready_[k] = true;
  }
  return obs_.rotated[k];
}

dataset::GraspAttempt Collector::step(const net::NetworkParams& params, net::SnapshotId snapshot_id,
                                      dataset::AttemptLog& log, long seq) {
  if (!have_scene_ || scene_.objects.empty() || attempts_on_scene_ >= config_.max_attempts_per_scene) respawn();
  if (map_ && map_->snapshot_id != snapshot_id) {
    // New network: its map differs, so earlier failures say nothing about its choices.
    map_.reset();
    excluded_.clear();
  }
  Rng rng(derive_seed(config_.seed, {0xc011, static_cast<std::uint64_t>(seq)}));
  const auto method = schedule_.draw(seq + config_.schedule_offset, rng);

  GraspIndex g;
  if (method.method == policy::Method::random) {
    g = policy::select(method, policy::ValueMap{}, rng, excluded_);
  } else {
    if (!map_) {
      depth();
      for (int k = 0; k < kRotations; ++k) rotated(k);
      map_ = policy::evaluate(params, obs_);
      map_->snapshot_id = snapshot_id;
      map_->scene_id = scene_id_;
    }
    g = policy::select(method, *map_, rng, excluded_);
  }

  const auto& img = depth();
  rotated(g.k_rot);
  const auto window = dataset::quantize_window(policy::cell_window(obs_, g));
  const double psi = net::forward_window(params, window.values)[g.k_d];

  const auto pose = sim::with_height(img, index_to_pose(g), grasp_);
  auto result = sim::attempt_grasp(scene_, pose, grasp_);
  ++attempts_on_scene_;

  dataset::GraspAttempt a;
  a.timestamp = dataset::make_timestamp(static_cast<std::uint64_t>(seq));
  a.index = g;
  a.reward = result.outcome.reward;
  a.psi_pred = psi;
  a.method = policy::to_token(method);
  a.scene_id = scene_id_;
  a.snapshot_id = snapshot_id;
  log.append(a, window);

  const bool changed = result.scene.objects != scene_.objects;
  scene_ = std::move(result.scene);
  if (changed) {
    invalidate();
  } else {
    excluded_.push_back(g.flat());
  }
  return a;
}

TrainOptions train_options(const Config& c, int epochs, std::uint64_t round) {
  TrainOptions o;
  o.max_epochs = epochs;
  o.patience = c.patience;
  o.batch_size = c.batch_size;
  o.l2_scale = c.l2_scale;
  o.kappa = c.kappa;
  o.seed = derive_seed(c.seed, {0x7a1, round});
  return o;
}

TrainingData load_training_data(const Config& c, const std::filesystem::path& log_dir) {
  TrainingData data;
  std::vector<std::filesystem::path> dirs;
  std::stringstream list(c.prior_logs);
  std::string item;
  while (std::getline(list, item, ','))
    if (!item.empty()) dirs.emplace_back(item);
  dirs.push_back(log_dir);
  for (const auto& d : dirs) {
    dataset::AttemptLog log(d);
    WindowCache cache(log);
    append_training_data(data, build_training_data(log.load_all(), cache));
  }
  return data;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  f << "attempts,loss,accuracy,f1,grasp_rate\n";
  f.precision(6);
  for (const auto& r : rows) f << r.attempts << ',' << r.loss << ',' << r.accuracy << ',' << r.f1 << ',' << r.grasp_rate << '\n';
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::vector<MetricsRow> rows;
  std::ifstream f(path);
  std::string line;
  if (!std::getline(f, line)) return rows;
  while (std::getline(f, line)) {
    MetricsRow r;
    char c;
    std::istringstream in(line);
    if (in >> r.attempts >> c >> r.loss >> c >> r.accuracy >> c >> r.f1 >> c >> r.grasp_rate) rows.push_back(r);
  }
  return rows;
}

namespace {

// Incremental view of the growing log so rounds do not reread every window.
class DataFeed {
 public:
  DataFeed(const Config& c, const std::filesystem::path& log_dir) : log_(log_dir), cache_(log_) {
    std::stringstream list(c.prior_logs);
    std::string item;
    while (std::getline(list, item, ','))
      if (!item.empty()) {
        dataset::AttemptLog prior(item);
        WindowCache pc(prior);
        append_training_data(data_, build_training_data(prior.load_all(), pc));
      }
  }

  const TrainingData& refresh() {
    const auto all = log_.load_all();
    if (all.size() > consumed_) {
      std::vector<dataset::GraspAttempt> fresh(all.begin() + static_cast<long>(consumed_), all.end());
      append_training_data(data_, build_training_data(fresh, cache_));
      consumed_ = all.size();
    }
    return data_;
  }

 private:
  dataset::AttemptLog log_;
  WindowCache cache_;
  TrainingData data_;
  std::size_t consumed_ = 0;
};

struct RoundOutcome {
  bool trained = false;
  TrainResult result;
};

RoundOutcome train_round(const Config& c, net::NetworkParams& params, net::SgdMomentum& opt, const TrainingData& data,
                         int epochs, std::uint64_t round) {
  RoundOutcome out;
  if (epochs <= 0) return out;
  net::NetworkParams work = c.warm_start ? params : net::init_params(derive_seed(c.seed, {0x1417, round}));
  net::SgdMomentum work_opt = c.warm_start ? opt : net::SgdMomentum{c.learning_rate, c.momentum, {}};
  try {
    out.result = train(work, work_opt, data, train_options(c, epochs, round));
  } catch (const dataset::SingleClassError&) {
    return out;  // nothing to learn from yet
  }
  if (out.result.best_epoch < 0) return out;
  params = std::move(work);
  opt = std::move(work_opt);
  out.trained = true;
  return out;
}

}  // namespace

PipelineResult run_pipeline(const Config& c, const std::filesystem::path& out, const net::NetworkParams* initial) {
  c.validate();
  std::filesystem::create_directories(out);
  {
    std::ofstream cfg(out / "config.txt", std::ios::trunc);
    cfg << to_text(c);
  }
  const auto log_dir = out / "log";
  net::SnapshotStore store(out / "snapshots");
  dataset::AttemptLog log(log_dir);
  auto metrics = read_metrics_csv(out / "metrics.csv");

  net::NetworkParams params;
  std::uint64_t first_scene = 0;
  const auto existing = log.load_all();
  for (const auto& a : existing) first_scene = std::max(first_scene, a.scene_id + 1);
  long seq = static_cast<long>(existing.size());
  if (auto latest = store.latest()) {
    params = *latest->second;
  } else {
    params = initial ? *initial : net::init_params(c.seed);
    store.publish(params);  // the collector always has a snapshot to read
  }
  net::SgdMomentum opt{c.learning_rate, c.momentum, {}};
  DataFeed feed(c, log_dir);
  Collector collector(c, first_scene);

  long window_attempts = 0, window_successes = 0;
  auto record_round = [&](const RoundOutcome& r, long attempts_now) {
    MetricsRow row;
    row.attempts = attempts_now;
    if (r.trained) {
      row.loss = r.result.best.loss;
      row.accuracy = r.result.best.accuracy;
      row.f1 = r.result.best.f1;
    } else if (!metrics.empty()) {
      row.loss = metrics.back().loss;
      row.accuracy = metrics.back().accuracy;
      row.f1 = metrics.back().f1;
    }
    row.grasp_rate = window_attempts ? static_cast<double>(window_successes) / window_attempts : 0.0;
    window_attempts = window_successes = 0;
    metrics.push_back(row);
    write_metrics_csv(out / "metrics.csv", metrics);
  };

  const long target = c.attempts;
  if (!c.threaded) {
    while (seq < target) {
      const auto [id, snap] = *store.latest();
      const auto a = collector.step(*snap, id, log, seq);
      ++seq;
      ++window_attempts;
      window_successes += a.reward;
      if (seq % c.train_interval == 0 && seq < target) {
        const auto r = train_round(c, params, opt, feed.refresh(), c.round_epochs, static_cast<std::uint64_t>(seq));
        if (r.trained) store.publish(params);
        record_round(r, seq);
      }
    }
  } else {
    // Collector and trainer share only the log (one writer) and the snapshot store (one publisher).
    std::atomic<bool> done{false};
    std::atomic<long> collected{seq};
    std::mutex mu;
    std::condition_variable cv;
    std::exception_ptr failure;
    std::thread collect_thread([&] {
      try {
        for (long s = seq; s < target; ++s) {
          const auto [id, snap] = *store.latest();
          const auto a = collector.step(*snap, id, log, s);
          {
            std::lock_guard lock(mu);
            ++window_attempts;
            window_successes += a.reward;
          }
          collected = s + 1;
          cv.notify_all();
        }
      } catch (...) {
        failure = std::current_exception();
      }
      done = true;
      cv.notify_all();
    });
    long trained_at = seq;
    while (true) {
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return done || collected - trained_at >= c.train_interval; });
      }
      if (done && collected - trained_at < c.train_interval) break;
      trained_at = collected;
      const auto r = train_round(c, params, opt, feed.refresh(), c.round_epochs, static_cast<std::uint64_t>(trained_at));
      if (r.trained) store.publish(params);
      std::lock_guard lock(mu);
      record_round(r, trained_at);
    }
    collect_thread.join();
    if (failure) std::rethrow_exception(failure);
    seq = collected;
  }

  PipelineResult result;
  const auto r = train_round(c, params, opt, feed.refresh(), c.max_epochs, static_cast<std::uint64_t>(seq) + 0xf1);
  result.final_training = r.result;
  result.final_snapshot = r.trained ? store.publish(params) : store.latest()->first;
  record_round(r, seq);
  result.final_snapshot_path = out / "final.snapshot";
  net::save_snapshot(*store.restore(result.final_snapshot), result.final_snapshot_path);
  result.metrics = metrics;
  result.attempts = seq;
  return result;
}

}  // namespace grasplab::trainer
