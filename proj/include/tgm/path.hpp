#pragma once

#include <cstdint>
#include <vector>

#include "tgm/regime.hpp"
#include "tgm/switching.hpp"

namespace tgm {

struct JumpEvent {
  double time;
  int exiting_state;
  double sojourn;     // completed sojourn in the exiting state
  double amplitude;   // h_{exiting}(sojourn)
};

struct PathRecord {
  SwitchingFlow flow;
  std::vector<double> times;  // sample grid
  std::vector<double> x;      // X at grid times (right-continuous at switches)
  std::vector<JumpEvent> jumps;
  std::vector<double> x_switch_pre;   // X(tau_n-)
  std::vector<double> x_switch_post;  // X(tau_n)
  // filled by the market layer
  std::vector<double> kappa;
  std::vector<double> price;
};

// additive jump amplitudes along a flow, exiting-state convention
std::vector<JumpEvent> jump_events(const SwitchingFlow& flow, const RegimePair& regimes);

// X(t) at the requested (sorted) times; exact per-segment displacements
std::vector<double> path_values(const SwitchingFlow& flow, const RegimePair& regimes,
                                const std::vector<double>& times);

PathRecord simulate_path(const SwitchingModel& model, const RegimePair& regimes,
                         double horizon, const std::vector<double>& sample_times,
                         std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace tgm
