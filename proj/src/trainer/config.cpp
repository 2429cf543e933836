#include "grasplab/trainer/config.hpp"

#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <type_traits>
#include <variant>

namespace grasplab::trainer {

namespace {

using Field = std::variant<int Config::*, double Config::*, bool Config::*, std::string Config::*,
                           std::uint64_t Config::*>;

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table{
      {"seed", &Config::seed},
      {"objects", &Config::objects},
      {"object_kind", &Config::object_kind},
      {"cylinder_diameter_mm", &Config::cylinder_diameter_mm},
      {"cylinder_height_mm", &Config::cylinder_height_mm},
      {"cube_edge_mm", &Config::cube_edge_mm},
      {"p_upright", &Config::p_upright},
      {"speckle_probability", &Config::speckle_probability},
      {"max_attempts_per_scene", &Config::max_attempts_per_scene},
      {"train_clamp_mode", &Config::train_clamp_mode},
      {"eval_clamp_mode", &Config::eval_clamp_mode},
      {"min_clamp_width_mm", &Config::min_clamp_width_mm},
      {"approach_retract_mm", &Config::approach_retract_mm},
      {"finger_width_mm", &Config::finger_width_mm},
      {"finger_thickness_mm", &Config::finger_thickness_mm},
      {"stability_fraction", &Config::stability_fraction},
      {"p_flip", &Config::p_flip},
      {"displace_on_failure", &Config::displace_on_failure},
      {"probe_radius_mm", &Config::probe_radius_mm},
      {"descent_offset_mm", &Config::descent_offset_mm},
      {"attempts", &Config::attempts},
      {"random_phase", &Config::random_phase},
      {"mix_random", &Config::mix_random},
      {"mix_probabilistic", &Config::mix_probabilistic},
      {"mix_uncertain", &Config::mix_uncertain},
      {"mix_maximum", &Config::mix_maximum},
      {"mix_maximum_n", &Config::mix_maximum_n},
      {"learning_rate", &Config::learning_rate},
      {"momentum", &Config::momentum},
      {"batch_size", &Config::batch_size},
      {"l2_scale", &Config::l2_scale},
      {"kappa", &Config::kappa},
      {"patience", &Config::patience},
      {"max_epochs", &Config::max_epochs},
      {"train_interval", &Config::train_interval},
      {"round_epochs", &Config::round_epochs},
      {"warm_start", &Config::warm_start},
      {"retrain_epochs", &Config::retrain_epochs},
      {"threaded", &Config::threaded},
      {"prior_logs", &Config::prior_logs},
      {"schedule_offset", &Config::schedule_offset},
      {"eval_n", &Config::eval_n},
      {"eval_m", &Config::eval_m},
      {"eval_trials", &Config::eval_trials},
      {"failure_budget", &Config::failure_budget},
      {"nominal_attempt_s", &Config::nominal_attempt_s},
      {"eval_seed", &Config::eval_seed},
  };
  return table;
}

template <class M>
struct member_type;
template <class T>
struct member_type<T Config::*> {
  using type = T;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

sim::ClampForceMode clamp_mode(const std::string& s) {
  if (s == "training_reduced") return sim::ClampForceMode::training_reduced;
  if (s == "application") return sim::ClampForceMode::application;
  throw ConfigError("clamp mode must be training_reduced or application, got '" + s + "'");
}

}  // namespace

sim::ObjectSpec Config::object_spec() const {
  if (object_kind == "cylinder") return sim::ObjectSpec::cylinder(cylinder_diameter_mm, cylinder_height_mm);
  if (object_kind == "cube") return sim::ObjectSpec::cube(cube_edge_mm);
  throw ConfigError("object_kind must be cylinder or cube, got '" + object_kind + "'");
}

sim::GraspConfig Config::grasp_config(bool evaluation) const {
  sim::GraspConfig g;
  g.clamp_force_mode = clamp_mode(evaluation ? eval_clamp_mode : train_clamp_mode);
  g.min_clamp_width_mm = min_clamp_width_mm;
  g.approach_retract_mm = approach_retract_mm;
  g.finger_width_mm = finger_width_mm;
  g.finger_thickness_mm = finger_thickness_mm;
  g.stability_fraction = stability_fraction;
  // Label noise models measurement errors while collecting; evaluation counts real outcomes.
  g.p_flip = evaluation ? 0.0 : p_flip;
  g.displace_on_failure = displace_on_failure;
  g.probe.radius_mm = probe_radius_mm;
  g.probe.descent_offset_mm = descent_offset_mm;
  return g;
}

sim::SpawnOptions Config::spawn_options() const {
  sim::SpawnOptions o;
  o.p_upright = p_upright;
  return o;
}

void Config::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  object_spec().validate();
  clamp_mode(train_clamp_mode);
  clamp_mode(eval_clamp_mode);
  require(objects >= 0, "objects must be >= 0");
  require(attempts >= 0, "attempts must be >= 0");
  require(random_phase >= 0, "random_phase must be >= 0");
  require(mix_random >= 0 && mix_probabilistic >= 0 && mix_uncertain >= 0 && mix_maximum >= 0,
          "mixture weights must be >= 0");
  require(mix_random + mix_probabilistic + mix_uncertain + mix_maximum > 0, "mixture weights sum to zero");
  require(mix_maximum_n >= 1, "mix_maximum_n must be >= 1");
  require(learning_rate >= 0, "learning_rate must be >= 0");
  require(momentum >= 0 && momentum < 1, "momentum must be in [0, 1)");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(l2_scale >= 0, "l2_scale must be >= 0");
  require(kappa >= 1, "kappa must be >= 1");
  require(patience >= 1, "patience must be >= 1");
  require(max_epochs >= 0 && round_epochs >= 0 && retrain_epochs >= 0, "epoch counts must be >= 0");
  require(train_interval >= 1, "train_interval must be >= 1");
  require(p_flip >= 0 && p_flip <= 1, "p_flip must be in [0, 1]");
  require(p_upright >= 0 && p_upright <= 1, "p_upright must be in [0, 1]");
  require(speckle_probability >= 0 && speckle_probability < 1, "speckle_probability must be in [0, 1)");
  require(eval_n >= 0 && eval_n <= eval_m, "evaluation needs 0 <= n <= m");
  require(eval_trials >= 0, "eval_trials must be >= 0");
  require(failure_budget >= 1, "failure_budget must be >= 1");
  require(nominal_attempt_s > 0, "nominal_attempt_s must be > 0");
  require(schedule_offset >= 0, "schedule_offset must be >= 0");
  require(max_attempts_per_scene >= 1, "max_attempts_per_scene must be >= 1");
}

Config parse_config(const std::string& text, Config c) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    auto bad = [&] { return ConfigError("line " + std::to_string(lineno) + ": bad value '" + value + "' for " + key); };
    std::visit(
        [&](auto member) {
          using T = typename member_type<decltype(member)>::type;
          if constexpr (std::is_same_v<T, std::string>) {
            c.*member = value;
          } else if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1") c.*member = true;
            else if (value == "false" || value == "0") c.*member = false;
            else throw bad();
          } else {
            std::istringstream v(value);
            T parsed{};
            if (!(v >> parsed) || !(v >> std::ws).eof()) throw bad();
            c.*member = parsed;
          }
        },
        it->second);
  }
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path, Config base) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_config(text, base);
}

std::string to_text(const Config& c) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [key, member] : fields()) {
    out << key << " = ";
    std::visit(
        [&](auto m) {
          using T = typename member_type<decltype(m)>::type;
          if constexpr (std::is_same_v<T, bool>) out << (c.*m ? "true" : "false");
          else out << c.*m;
        },
        member);
    out << '\n';
  }
  return out.str();
}

}  // namespace grasplab::trainer
