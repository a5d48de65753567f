#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "tgm/common.hpp"

namespace tgm {

// Velocity/jump pair attached to one state.  The velocity may depend on the
// sojourn T spent in the previous state and on the local time t since the last
// switch; the jump is a function of the completed sojourn in this state.
struct RegimeSpec {
  std::function<double(double, double)> velocity;        // (T, t)
  std::function<double(double)> jump;                    // completed sojourn
  std::function<double(double, double)> antiderivative;  // A(T,t) = int_0^t c(T,u) du
  bool velocity_depends_on_prev = false;
  std::string label;

  bool has_antiderivative() const { return static_cast<bool>(antiderivative); }
};

using RegimePair = std::array<RegimeSpec, 2>;

RegimeSpec constant_regime(double c, double h);
// c(t) = a / (1 + a t), h(T) = b / (1 + a T)
RegimeSpec hyperbolic_regime(double a, double b);
// c(t) = cs t, h(T) = hs T
RegimeSpec linear_regime(double cs, double hs);
// bilinear velocity over (T, t) plus a 1-d jump table over T; clamped outside
RegimeSpec table_regime(std::vector<double> prev_grid, std::vector<double> t_grid,
                        std::vector<std::vector<double>> velocity,
                        std::vector<double> jump_grid, std::vector<double> jump_values);

// displacement \int_s^t c(T, u - origin) du for a segment that began at origin
double segment_displacement(const RegimeSpec& regime, double prev_sojourn, double s,
                            double t, double origin);

}  // namespace tgm
