#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tgm/path.hpp"

namespace tgm {

// Parallel kernels write per-replication results into preassigned slots and
// reduce serially afterwards, so serial and parallel runs are bit-identical.
enum class Exec { serial, parallel };

void parallel_for(std::size_t n, Exec exec, const std::function<void(std::size_t)>& fn);

// thread cap from TGM_THREADS (0 = leave the OpenMP default); returns the cap
int apply_thread_cap();

struct McMoments {
  std::vector<double> t;
  std::vector<double> mean, var;       // sample mean / unbiased variance of X(t)
  std::vector<double> se_mean, se_var;
  std::size_t n_paths = 0;
};

McMoments mc_path_moments(const SwitchingModel& model, const RegimePair& regimes,
                          const std::vector<double>& times, std::size_t n_paths,
                          std::uint64_t seed, Exec exec = Exec::parallel);

// X(t) replications at a single time, one slot per path
std::vector<double> mc_terminal_values(const SwitchingModel& model, const RegimePair& regimes,
                                       double t, std::size_t n_paths, std::uint64_t seed,
                                       Exec exec = Exec::parallel);

}  // namespace tgm
