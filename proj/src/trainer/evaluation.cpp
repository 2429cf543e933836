#include "grasplab/trainer/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "grasplab/core/random.hpp"
#include "grasplab/policy/policy.hpp"
#include "grasplab/sim/simulator.hpp"

namespace grasplab::trainer {

EvalProtocol EvalProtocol::parse(const std::string& s) {
  EvalProtocol p;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (!(in >> p.n >> c1 >> p.m >> c2 >> p.trials) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof())
    throw std::invalid_argument("protocol must look like n:m:trials, got '" + s + "'");
  if (p.n < 0 || p.m < 0 || p.trials < 0) throw std::invalid_argument("protocol values must be >= 0");
  if (p.n > p.m) throw std::invalid_argument("protocol needs n <= m");
  return p;
}

std::string EvalProtocol::to_string() const {
  return std::to_string(n) + ":" + std::to_string(m) + ":" + std::to_string(trials);
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1 + z2 / n;
  const double center = (p + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

MetricsReport evaluate_grasp_rate(const net::NetworkParams& params, const EvalProtocol& protocol, const Config& c,
                                  std::uint64_t seed) {
  if (protocol.n > protocol.m) throw std::invalid_argument("protocol needs n <= m");
  const auto spec = c.object_spec();
  const auto grasp = c.grasp_config(true);
  const auto spawn = c.spawn_options();
  MetricsReport r;
  r.protocol = protocol;

  for (int t = 0; t < protocol.trials; ++t) {
    auto scene = sim::spawn_scene(protocol.m, spec, derive_seed(seed, {0xe7a1, static_cast<std::uint64_t>(t)}), spawn);
    Rng rng(derive_seed(seed, {0x5e1ec7, static_cast<std::uint64_t>(t)}));
    int removed = 0, failed_plans = 0;
    std::vector<int> excluded;
    image::DepthImage depth;
    policy::ValueMap map;
    std::vector<sim::PlacedObject> mapped;  // objects the cached map was computed for
    bool have_map = false;
    while (removed < protocol.n && failed_plans < protocol.failure_budget && !scene.objects.empty()) {
      // A failed plan leaves the bin untouched; without speckle the image and map are unchanged too.
      if (!have_map || c.speckle_probability > 0 || scene.objects != mapped) {
        sim::RenderOptions ro;
        ro.speckle_probability = c.speckle_probability;
        ro.speckle_seed = derive_seed(scene.rng_seed, {0x59ec, scene.attempts});
        depth = sim::render_depth(scene, ro);
        map = policy::evaluate(params, depth);
        mapped = scene.objects;
        have_map = true;
      }
      const auto plan = policy::exploit_with_retry(map, rng, excluded);
      bool success = false;
      for (const auto& g : {plan.first, plan.retry}) {
        const auto pose = sim::with_height(depth, index_to_pose(g), grasp);
        auto result = sim::attempt_grasp(scene, pose, grasp);
        ++r.attempts;
        scene = std::move(result.scene);
        if (result.outcome.reward == 1) {
          ++r.successes;
          ++removed;
          excluded.clear();
          success = true;
          break;
        }
        excluded.push_back(g.flat());
      }
      failed_plans = success ? 0 : failed_plans + 1;
    }
    if (removed >= protocol.n) ++r.trial_successes;
  }
  // With n = 0 every trial succeeds without attempting anything.
  r.grasp_rate = r.attempts ? static_cast<double>(r.successes) / static_cast<double>(r.attempts) : 1.0;
  r.grasp_rate_ci = r.attempts ? wilson_interval(r.successes, r.attempts) : Interval{1.0, 1.0};
  r.trial_rate = protocol.trials ? static_cast<double>(r.trial_successes) / protocol.trials : 1.0;
  r.trial_rate_ci = wilson_interval(r.trial_successes, static_cast<std::size_t>(protocol.trials));
  r.pph = 3600.0 / c.nominal_attempt_s * r.grasp_rate;
  return r;
}

std::string format_report(const MetricsReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "protocol %s: grasp rate %.4f [%.4f, %.4f] (%zu/%zu attempts), trials %.4f [%.4f, %.4f] (%zu/%d), "
                "PPH %.1f (nominal)",
                r.protocol.to_string().c_str(), r.grasp_rate, r.grasp_rate_ci.lo, r.grasp_rate_ci.hi, r.successes,
                r.attempts, r.trial_rate, r.trial_rate_ci.lo, r.trial_rate_ci.hi, r.trial_successes, r.protocol.trials,
                r.pph);
  return buf;
}

}  // namespace grasplab::trainer
