#pragma once

#include <vector>

#include "grasplab/core/random.hpp"
#include "grasplab/policy/policy.hpp"

namespace grasplab::trainer {

struct Config;

struct MethodWeight {
  policy::SelectionMethod method;
  double probability;
};

struct SchedulePhase {
  long begin = 0;  // first attempt number (inclusive)
  long end = 0;    // exclusive; < 0 for open-ended
  std::vector<MethodWeight> mix;
};

class ExplorationSchedule {
 public:
  // Phases must be contiguous from 0; each mix must sum to 1.
  explicit ExplorationSchedule(std::vector<SchedulePhase> phases);

  // Random for the first `random_phase` attempts, then the configured mixture.
  static ExplorationSchedule from_config(const Config& c);

  const SchedulePhase& phase_for(long attempt) const;
  policy::SelectionMethod draw(long attempt, Rng& rng) const;
  const std::vector<SchedulePhase>& phases() const { return phases_; }

 private:
  std::vector<SchedulePhase> phases_;
};

}  // namespace grasplab::trainer
