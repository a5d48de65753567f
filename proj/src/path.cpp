#include "tgm/path.hpp"

#include <algorithm>
#include <cmath>

namespace tgm {

std::vector<JumpEvent> jump_events(const SwitchingFlow& flow, const RegimePair& regimes) {
  std::vector<JumpEvent> events;
  events.reserve(flow.switch_times.size());
  for (std::size_t n = 0; n < flow.switch_times.size(); ++n) {
    const int exiting = flow.state_of_segment(n);
    const double sojourn = flow.switch_times[n] - flow.segment_start(n);
    events.push_back({flow.switch_times[n], exiting, sojourn,
                      regimes[exiting].jump(sojourn)});
  }
  return events;
}

std::vector<double> path_values(const SwitchingFlow& flow, const RegimePair& regimes,
                                const std::vector<double>& times) {
  require(std::is_sorted(times.begin(), times.end()), "path_values: times must be sorted");
  if (!times.empty())
    require(times.front() >= 0 && times.back() <= flow.horizon,
            "path_values: sample times outside [0, horizon]");

  std::vector<double> out(times.size());
  const std::size_t n_seg = flow.switch_times.size() + 1;
  double x_start = 0;  // X at the current segment start (post-jump)
  std::size_t k = 0;
  for (std::size_t n = 0; n < n_seg && k < times.size(); ++n) {
    const double a = flow.segment_start(n);
    const double b = n + 1 < n_seg ? flow.switch_times[n] : flow.horizon;
    const int state = flow.state_of_segment(n);
    const double prev = flow.sojourn_before_segment(n);
    // right-continuity: a time equal to the next switch belongs to segment n+1
    while (k < times.size() && (times[k] < b || (n + 1 == n_seg && times[k] <= b))) {
      out[k] = x_start + segment_displacement(regimes[state], prev, a, times[k], a);
      ++k;
    }
    if (n + 1 < n_seg) {
      const double sojourn = b - a;
      x_start += segment_displacement(regimes[state], prev, a, b, a) +
                 regimes[state].jump(sojourn);
    }
  }
  return out;
}

PathRecord simulate_path(const SwitchingModel& model, const RegimePair& regimes,
                         double horizon, const std::vector<double>& sample_times,
                         std::uint64_t seed, std::uint64_t stream) {
  PathRecord rec;
  rec.flow = generate_flow(model, horizon, seed, stream);
  rec.times = sample_times;
  rec.x = path_values(rec.flow, regimes, sample_times);
  rec.jumps = jump_events(rec.flow, regimes);

  rec.x_switch_pre.resize(rec.jumps.size());
  rec.x_switch_post.resize(rec.jumps.size());
  double x_start = 0;
  for (std::size_t n = 0; n < rec.jumps.size(); ++n) {
    const double a = rec.flow.segment_start(n);
    const double b = rec.flow.switch_times[n];
    const int state = rec.flow.state_of_segment(n);
    const double prev = rec.flow.sojourn_before_segment(n);
    const double pre = x_start + segment_displacement(regimes[state], prev, a, b, a);
    rec.x_switch_pre[n] = pre;
    rec.x_switch_post[n] = pre + rec.jumps[n].amplitude;
    x_start = rec.x_switch_post[n];
  }
  return rec;
}

}  // namespace tgm
