#include "tgm/switching.hpp"

#include <algorithm>

namespace tgm {

namespace {
constexpr std::size_t kMaxSwitches = 20'000'000;
}

SwitchingFlow generate_flow(const SwitchingModel& model, double horizon,
                            std::uint64_t seed, std::uint64_t stream) {
  require(horizon >= 0, "generate_flow: horizon must be nonnegative");
  require(model.initial_state == 0 || model.initial_state == 1,
          "generate_flow: initial_state must be 0 or 1");
  Rng rng(seed, stream);

  SwitchingFlow flow;
  flow.initial_state = model.initial_state;
  flow.horizon = horizon;
  if (model.fixed_prev_sojourn) {
    require(*model.fixed_prev_sojourn >= 0, "generate_flow: fixed previous sojourn < 0");
    flow.prev_sojourn = *model.fixed_prev_sojourn;
  } else {
    flow.prev_sojourn = model.dist[1 - model.initial_state].sample(rng);
  }

  double t = 0;
  int state = model.initial_state;
  while (true) {
    require_numeric(flow.switch_times.size() < kMaxSwitches,
                    "generate_flow: switch count exploded");
    const double tau = t + model.dist[state].sample(rng);
    if (tau > horizon) {
      flow.censored_next = tau;
      break;
    }
    flow.switch_times.push_back(tau);
    t = tau;
    state = 1 - state;
  }
  return flow;
}

std::size_t SwitchingFlow::segment_index(double t) const {
  // first segment with start > t, minus one; switch times are segment starts
  const auto it = std::upper_bound(switch_times.begin(), switch_times.end(), t);
  return static_cast<std::size_t>(it - switch_times.begin());
}

std::size_t SwitchingFlow::count(double t) const {
  const auto it = std::upper_bound(switch_times.begin(), switch_times.end(), t);
  return static_cast<std::size_t>(it - switch_times.begin());
}

StateAt state_at(const SwitchingFlow& flow, double t) {
  require(t >= 0 && t <= flow.horizon, "state_at: time outside [0, horizon]");
  const std::size_t n = flow.segment_index(t);
  return {flow.state_of_segment(n), t - flow.segment_start(n)};
}

}  // namespace tgm
