#pragma once

#include <cstdint>
#include <string>

#include "grasplab/net/layers.hpp"
#include "grasplab/trainer/config.hpp"

namespace grasplab::trainer {

// Grasp n of m objects without replacement.
struct EvalProtocol {
  int n = 10;
  int m = 20;
  int trials = 100;
  int failure_budget = 2;

  // "n:m:trials"
  static EvalProtocol parse(const std::string& s);
  std::string to_string() const;
};

struct Interval {
  double lo = 0;
  double hi = 1;
};

// Wilson score interval; z = 1.96 by default.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct MetricsReport {
  EvalProtocol protocol;
  std::size_t attempts = 0;
  std::size_t successes = 0;
  double grasp_rate = 0;  // successes / attempts
  Interval grasp_rate_ci;
  std::size_t trial_successes = 0;
  double trial_rate = 0;  // trials in which all n objects were removed
  Interval trial_rate_ci;
  double pph = 0;  // picks per hour at the nominal attempt duration
};

// Each trial: spawn m objects (held-out seeds), then repeat exploit_with_retry plans until n
// objects are removed or `failure_budget` consecutive plans fail entirely. Cells that failed
// stay excluded until the scene changes.
MetricsReport evaluate_grasp_rate(const net::NetworkParams& params, const EvalProtocol& protocol, const Config& c,
                                  std::uint64_t seed);

std::string format_report(const MetricsReport& r);

}  // namespace grasplab::trainer
