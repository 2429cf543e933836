#include "grasplab/trainer/schedule.hpp"

#include <cmath>
#include <stdexcept>

#include "grasplab/trainer/config.hpp"

namespace grasplab::trainer {

ExplorationSchedule::ExplorationSchedule(std::vector<SchedulePhase> phases) : phases_(std::move(phases)) {
  if (phases_.empty()) throw std::invalid_argument("schedule needs at least one phase");
  long expect = 0;
  for (std::size_t k = 0; k < phases_.size(); ++k) {
    const auto& p = phases_[k];
    if (p.begin != expect) throw std::invalid_argument("schedule phases must be contiguous from attempt 0");
    const bool last = k + 1 == phases_.size();
    if (!last && p.end <= p.begin) throw std::invalid_argument("empty schedule phase");
    if (last && p.end >= 0 && p.end <= p.begin) throw std::invalid_argument("empty schedule phase");
    double sum = 0;
    for (const auto& m : p.mix) {
      if (m.probability < 0) throw std::invalid_argument("negative method probability");
      sum += m.probability;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("phase probabilities must sum to 1");
    expect = p.end;
  }
}

ExplorationSchedule ExplorationSchedule::from_config(const Config& c) {
  const double total = c.mix_random + c.mix_probabilistic + c.mix_uncertain + c.mix_maximum;
  SchedulePhase mixed;
  mixed.begin = c.random_phase;
  mixed.end = -1;
  mixed.mix = {{{policy::Method::random, 1}, c.mix_random / total},
               {{policy::Method::probabilistic, 1}, c.mix_probabilistic / total},
               {{policy::Method::uncertain, 1}, c.mix_uncertain / total},
               {{policy::Method::maximum, c.mix_maximum_n}, c.mix_maximum / total}};
  std::vector<SchedulePhase> phases;
  if (c.random_phase > 0) phases.push_back({0, c.random_phase, {{{policy::Method::random, 1}, 1.0}}});
  phases.push_back(mixed);
  return ExplorationSchedule(std::move(phases));
}

const SchedulePhase& ExplorationSchedule::phase_for(long attempt) const {
  for (const auto& p : phases_)
    if (attempt >= p.begin && (p.end < 0 || attempt < p.end)) return p;
  return phases_.back();
}

policy::SelectionMethod ExplorationSchedule::draw(long attempt, Rng& rng) const {
  const auto& p = phase_for(attempt);
  const double u = uniform01(rng);
  double acc = 0;
  for (const auto& m : p.mix) {
    acc += m.probability;
    if (u < acc) return m.method;
  }
  for (auto it = p.mix.rbegin(); it != p.mix.rend(); ++it)
    if (it->probability > 0) return it->method;
  return p.mix.back().method;
}

}  // namespace grasplab::trainer
