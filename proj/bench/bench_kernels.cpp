// Timing comparison of the serial reference kernels against the parallel
// ones.  Not a test: prints a table and exits 0.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "tgm/mc.hpp"
#include "tgm/moments.hpp"
#include "tgm/regime.hpp"
#include "tgm/sojourn.hpp"

using namespace tgm;

namespace {

double time_ms(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s %10.1f ms %10.1f ms %8.2fx\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n_paths = 200000;
  if (argc > 1) n_paths = std::stoul(argv[1]);
  const std::size_t threads = apply_thread_cap();

  const ProcessModel m{
      {{exponential_sojourn(24.0), exponential_sojourn(30.0)}, 0, {}},
      {constant_regime(1.2, -0.05), constant_regime(0.6, -0.02)}};
  const std::vector<double> times = uniform_grid(0.0, 2.0, 9);

  std::printf("threads: %zu (TGM_THREADS caps), paths: %zu\n", threads, n_paths);
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  McMoments serial_mc, parallel_mc;
  const double mc_s = time_ms([&] {
    serial_mc = mc_path_moments(m.switching, m.regimes, times, n_paths, 11, Exec::serial);
  });
  const double mc_p = time_ms([&] {
    parallel_mc =
        mc_path_moments(m.switching, m.regimes, times, n_paths, 11, Exec::parallel);
  });
  report("mc_path_moments", mc_s, mc_p);
  if (serial_mc.mean != parallel_mc.mean || serial_mc.var != parallel_mc.var) {
    std::printf("mismatch: serial and parallel moments differ\n");
    return 1;
  }

  const double t_max = 2.0;
  const RegimeCurves curves = build_regime_curves(m, t_max);
  const MomentCurves mom = moment_curves(m, t_max, 4096, SolveMethod::grid);
  std::array<std::vector<double>, 2> fs, fp;
  const double vf_s = time_ms([&] {
    fs = variance_forcing_grid(m, curves, mom.mu, t_max, VarianceMode::exact,
                               Exec::serial);
  });
  const double vf_p = time_ms([&] {
    fp = variance_forcing_grid(m, curves, mom.mu, t_max, VarianceMode::exact,
                               Exec::parallel);
  });
  report("variance_forcing_grid", vf_s, vf_p);
  if (fs != fp) {
    std::printf("mismatch: serial and parallel forcings differ\n");
    return 1;
  }

  std::printf("serial and parallel results are bitwise identical\n");
  return 0;
}
