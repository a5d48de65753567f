#include "tgm/mc.hpp"

#include <cmath>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tgm {

void parallel_for(std::size_t n, Exec exec, const std::function<void(std::size_t)>& fn) {
#ifdef _OPENMP
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      fn(static_cast<std::size_t>(i));
    return;
  }
#else
  (void)exec;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

int apply_thread_cap() {
  const char* env = std::getenv("TGM_THREADS");
  if (!env) return 0;
  const int cap = std::atoi(env);
  if (cap <= 0) return 0;
#ifdef _OPENMP
  omp_set_num_threads(cap);
#endif
  return cap;
}

McMoments mc_path_moments(const SwitchingModel& model, const RegimePair& regimes,
                          const std::vector<double>& times, std::size_t n_paths,
                          std::uint64_t seed, Exec exec) {
  require(n_paths >= 2, "mc_path_moments: need at least two paths");
  require(!times.empty(), "mc_path_moments: no sample times");
  const double horizon = times.back();
  const std::size_t m = times.size();

  std::vector<double> values(n_paths * m);
  parallel_for(n_paths, exec, [&](std::size_t i) {
    const SwitchingFlow flow = generate_flow(model, horizon, seed, i);
    const std::vector<double> x = path_values(flow, regimes, times);
    std::copy(x.begin(), x.end(), values.begin() + static_cast<std::ptrdiff_t>(i * m));
  });

  McMoments out;
  out.t = times;
  out.n_paths = n_paths;
  out.mean.resize(m);
  out.var.resize(m);
  out.se_mean.resize(m);
  out.se_var.resize(m);
  const double n = static_cast<double>(n_paths);
  for (std::size_t j = 0; j < m; ++j) {
    long double s = 0;
    for (std::size_t i = 0; i < n_paths; ++i) s += values[i * m + j];
    const double mean = static_cast<double>(s / n);
    long double s2 = 0, s4 = 0;
    for (std::size_t i = 0; i < n_paths; ++i) {
      const double d = values[i * m + j] - mean;
      s2 += d * d;
      s4 += d * d * d * d;
    }
    const double var = static_cast<double>(s2) / (n - 1);
    const double m4 = static_cast<double>(s4) / n;
    out.mean[j] = mean;
    out.var[j] = var;
    out.se_mean[j] = std::sqrt(var / n);
    // Var(s^2) = (m4 - (n-3)/(n-1) var^2) / n
    out.se_var[j] = std::sqrt(std::max(0.0, m4 - (n - 3) / (n - 1) * var * var) / n);
  }
  return out;
}

std::vector<double> mc_terminal_values(const SwitchingModel& model, const RegimePair& regimes,
                                       double t, std::size_t n_paths, std::uint64_t seed,
                                       Exec exec) {
  std::vector<double> out(n_paths);
  const std::vector<double> times{t};
  parallel_for(n_paths, exec, [&](std::size_t i) {
    const SwitchingFlow flow = generate_flow(model, t, seed, i);
    out[i] = path_values(flow, regimes, times)[0];
  });
  return out;
}

}  // namespace tgm
