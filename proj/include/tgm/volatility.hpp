#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <vector>

#include "tgm/moments.hpp"

namespace tgm {

// shorthand for the equal-rate constant model: velocity half-spread c,
// jump mean B, jump half-spread b, and the per-state tilts gamma_i
struct SymmetricHVParams {
  double lambda = 0;
  double c = 0;                              // (c0 - c1) / 2
  double B = 0;                              // (h0 + h1) / 2
  double b = 0;                              // (h0 - h1) / 2
  std::array<double, 2> gamma = {0.0, 0.0};  // -2c(c/lambda + (-1)^i h_i)
};

SymmetricHVParams symmetric_hv_params(double lambda0, double lambda1, double c0,
                                      double c1, double h0, double h1);

struct HvLimits {
  double small_t_0 = std::numeric_limits<double>::quiet_NaN();
  double small_t_1 = std::numeric_limits<double>::quiet_NaN();
  double large_t = std::numeric_limits<double>::quiet_NaN();
};

struct VolatilityCurve {
  std::vector<double> t;
  std::vector<double> hv0, hv1;  // sqrt(Var X_i(t) / t)
  HvLimits limits;               // NaN fields where no formula applies
};

// annualized dispersion of the process started in each state, on a strictly
// positive time grid; the closed-form method needs exponential sojourns on
// both states, the grid method solves on n_steps uniform panels
VolatilityCurve hv_curve(const ProcessModel& m, const std::vector<double>& t_grid,
                         SolveMethod method = SolveMethod::grid,
                         std::size_t n_steps = 2048, Exec exec = Exec::parallel);

// closed form for equal rates and constant regimes; t = 0 is allowed and
// evaluates the continuous extension sqrt(lambda)|h_i|
VolatilityCurve hv_symmetric(const SymmetricHVParams& p, const std::vector<double>& t_grid);

// limit values for constant regimes under exponential switching: the origin
// level sqrt(lambda_i)|h_i| per state and the common stationary level, which
// requires the velocity ordering c0 > c1
HvLimits hv_limits(double c0, double c1, double h0, double h1, double lambda0,
                   double lambda1);

// dispersion curve of the exponentially-decaying moving-average benchmark;
// lambda0 may be negative as long as lambda1 and lambda0 + lambda1 stay positive
VolatilityCurve hv_moving_average(double sigma, double lambda0, double lambda1,
                                  const std::vector<double>& t_grid);

}  // namespace tgm
