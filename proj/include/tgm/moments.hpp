#pragma once

#include <array>
#include <functional>
#include <vector>

#include "tgm/mc.hpp"
#include "tgm/regime.hpp"
#include "tgm/switching.hpp"
#include "tgm/volterra.hpp"

namespace tgm {

struct ProcessModel {
  SwitchingModel switching;
  RegimePair regimes;
};

// Per-state curves averaged over the previous sojourn tau ~ f_{1-i}:
// mean velocity, mean displacement, displacement variance (zero whenever the
// velocity ignores tau), and the jump amplitude as a function of the
// completed sojourn.  All callables are valid on [0, t_max].
struct RegimeCurves {
  std::array<std::function<double(double)>, 2> mean_velocity;
  std::array<std::function<double(double)>, 2> mean_displacement;
  std::array<std::function<double(double)>, 2> displacement_variance;
  std::array<std::function<double(double)>, 2> jump;
  std::array<bool, 2> prev_dependent = {false, false};
  double t_max = 0;
};

RegimeCurves build_regime_curves(const ProcessModel& m, double t_max,
                                 std::size_t n_tau = 1024, std::size_t n_fine = 2048);

// Mean forcing a_i(t) = int_0^t (Fbar_i cbar_i + f_i h_i) du, plus the
// elapsed-time form a_i(t|s) = lbar_i(s) + (a_i(t) - a_i(s)) / Fbar_i(s).
struct MeanForcing {
  std::array<std::function<double(double)>, 2> a;
  std::array<std::function<double(double, double)>, 2> conditional;  // (t, s)
};

MeanForcing mean_forcing(const ProcessModel& m, const RegimeCurves& curves, double t_max);

enum class VarianceMode {
  exact,         // expectation over tau of the squared bracket
  squared_mean,  // square of the tau-averaged bracket (coincides when the
                 // velocity ignores tau)
};

enum class SolveMethod { grid, closed_form_exp };

struct MomentCurves {
  std::vector<double> t;
  std::array<std::vector<double>, 2> mu;
  std::array<std::vector<double>, 2> sigma;  // variances of X(t)
};

// Variance forcing sampled on the uniform mean grid:
// b_i(t) = Fbar_i(t) E[(A_i - mu_i(t))^2]
//        + int_0^t E[(A_i(u) + h_i(u) + mu_{1-i}(t-u) - mu_i(t))^2] f_i(u) du.
// O(n^2) kernel, parallel over output points.
std::array<std::vector<double>, 2> variance_forcing_grid(
    const ProcessModel& m, const RegimeCurves& curves,
    const std::array<std::vector<double>, 2>& mu, double t_max,
    VarianceMode mode = VarianceMode::exact, Exec exec = Exec::parallel);

// Means and variances on a uniform grid of n_steps panels over [0, t_max].
// closed_form_exp requires exponential sojourns on both states and evaluates
// the resolvent form, independent of the output grid resolution.
MomentCurves moment_curves(const ProcessModel& m, double t_max, std::size_t n_steps,
                           SolveMethod method = SolveMethod::grid,
                           VarianceMode mode = VarianceMode::exact,
                           Exec exec = Exec::parallel);

// Closed-form-route moments at arbitrary nondecreasing times (exponential
// sojourns only); the values do not depend on any solver grid.
MomentCurves moment_values(const ProcessModel& m, const std::vector<double>& times,
                           VarianceMode mode = VarianceMode::exact);

// mu_i(t|s): mean at t when state i has already been occupied for s, with
// displacement measured from the last switch.  Uses the unconditional means.
std::array<std::vector<double>, 2> conditional_mean(const ProcessModel& m,
                                                    const MeanForcing& forcing,
                                                    const MomentCurves& unconditional,
                                                    double s,
                                                    const std::vector<double>& t_out);

}  // namespace tgm
