#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "tgm/sojourn.hpp"

namespace tgm {

// Two-state semi-Markov switching flow.  Sojourns alternate between the two
// laws; the sojourn spent in the state occupied before time 0 ("previous
// sojourn") feeds the first velocity segment.
struct SwitchingModel {
  std::array<SojournDistribution, 2> dist;
  int initial_state = 0;
  // empty: previous sojourn drawn from dist[1 - initial_state]
  std::optional<double> fixed_prev_sojourn;
};

struct SwitchingFlow {
  int initial_state = 0;
  double horizon = 0;
  double prev_sojourn = 0;
  std::vector<double> switch_times;  // switches in (0, horizon], increasing
  // first switch past the horizon; its (censored) sojourn is retained
  double censored_next = std::numeric_limits<double>::infinity();

  int state_of_segment(std::size_t n) const {
    return (n % 2 == 0) ? initial_state : 1 - initial_state;
  }
  double segment_start(std::size_t n) const { return n == 0 ? 0.0 : switch_times[n - 1]; }
  // sojourn completed when segment n begins (T_0 for the first segment)
  double sojourn_before_segment(std::size_t n) const {
    if (n == 0) return prev_sojourn;
    return switch_times[n - 1] - segment_start(n - 1);
  }
  std::size_t segment_index(double t) const;  // right-continuous at switches
  std::size_t count(double t) const;          // N(t) = #switches in (0, t]
};

struct StateAt {
  int state;
  double elapsed;  // time since the last switch (or since 0)
};

SwitchingFlow generate_flow(const SwitchingModel& model, double horizon,
                            std::uint64_t seed, std::uint64_t stream = 0);

StateAt state_at(const SwitchingFlow& flow, double t);

inline double conditional_survival(const SojournDistribution& d, double s, double t) {
  return d.conditional_survival(s, t);
}

inline double sample_sojourn(const SojournDistribution& d, Rng& rng) { return d.sample(rng); }

}  // namespace tgm
