#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tgm/mc.hpp"
#include "tgm/moments.hpp"

namespace tgm {

// Position law of X(t), split into the no-switch atom and the absolutely
// continuous remainder sampled on a uniform x grid (piecewise-linear values,
// trapezoid integration convention).
struct DensityAtom {
  double x = 0;
  double mass = 0;
};

struct DensitySurface {
  std::vector<double> x;  // uniform, ascending
  std::vector<double> t;  // slice times, t[k] = observation_start + k dt
  double observation_start = 0;  // conditioned on no switch during [0, start]
  std::array<std::vector<std::vector<double>>, 2> density;  // [state][slice][x]
  std::array<std::vector<DensityAtom>, 2> atom;             // [state][slice]

  // atom mass plus the trapezoid integral of the continuous part
  double slice_mass(int state, std::size_t k) const;
};

// Forward time-stepping of the coupled renewal system for the position law.
// Velocities must not depend on the previous sojourn (jump amplitudes may);
// the general case is served by mc_density.
DensitySurface density_surface(const ProcessModel& m, double t_max, std::size_t n_steps,
                               std::vector<double> x_grid, double observation_start = 0,
                               Exec exec = Exec::parallel);

struct McDensity {
  double t = 0;
  std::vector<double> edges;         // bin edges, ascending
  std::vector<std::uint64_t> count;  // switched paths per bin
  std::uint64_t no_switch = 0;       // singular-part tally
  std::uint64_t off_range = 0;       // switched paths outside the edges
  std::uint64_t n_paths = 0;
};

// Histogram of simulated X(t); paths without any switch are tallied apart as
// the empirical counterpart of the singular atom.
McDensity mc_density(const ProcessModel& m, double t, std::vector<double> edges,
                     std::size_t n_paths, std::uint64_t seed, Exec exec = Exec::parallel);

}  // namespace tgm
