#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tgm/mc.hpp"
#include "tgm/moments.hpp"
#include "tgm/path.hpp"
#include "tgm/regime.hpp"
#include "tgm/sojourn.hpp"
#include "tgm/switching.hpp"

namespace tgm {

// European payoff H(S(U)) together with the far-field slopes dH/dS used when
// a price surface is evaluated beyond its log-spot grid.
struct OptionSpec {
  std::function<double(double)> payoff;  // spot -> value >= 0
  double maturity = 0;                   // 0: inherit the model maturity
  double slope_lo = 0, slope_hi = 0;     // dH/dS far below / above the grid
  std::optional<double> strike;          // default grids straddle it when set
  std::string label = "option";
};

OptionSpec call_option(double strike);
OptionSpec put_option(double strike);
OptionSpec digital_option(double strike);  // pays 1{spot >= strike}

// Price process S(t) = spot * exp{int_0^t c_{state} du} * prod (1 + h) over
// the switches, driven by the two-state flow under the pricing-measure
// sojourn laws.  Jump amplitudes must stay above -1.  Optional short-rate
// regimes discount payoffs; the solvers handle rates that depend on the
// local segment time only, anything richer goes through discounted_model().
struct MarketModel {
  double spot = 1.0;
  RegimePair regimes;
  std::array<SojournDistribution, 2> q_dist;  // pricing-measure sojourn laws
  std::optional<RegimePair> rates;            // r_i(T, t) >= 0
  double maturity = 1.0;                      // U
};

// velocities replaced by c_i - r_i and the rates cleared; identity when no
// rates are attached.  Pricing the reduced model values the payoff on the
// discounted spot.
MarketModel discounted_model(const MarketModel& m);

// process whose additive paths are log(S(t)/spot): same velocities, jump
// amplitudes log1p(h)
ProcessModel log_price_model(const MarketModel& m, int initial_state);

// ---------------- path-level operations ----------------

// fills x, jumps, switch values, kappa and price along the flow;
// throws if any sampled jump factor 1 + h drops to zero or below
PathRecord stochastic_exponential_path(const MarketModel& m, const SwitchingFlow& flow,
                                       const std::vector<double>& sample_times);

// accumulation factor exp{int_0^t r_{state} du} along the flow
double bond_factor(const RegimePair& rate_regime, const SwitchingFlow& flow, double t);

// ---------------- price surfaces ----------------

// Option values on a log-spot x calendar-time grid, one sheet per current
// state; value[i][k] is the slice at t[k] and the terminal slice equals the
// payoff.  conditional[i][si][k] additionally conditions on an elapsed
// sojourn s_grid[si] in the current state; `normalized` slices divide out
// the survival of the elapsed time, so their terminal slice stays H.
struct PriceSurface {
  std::vector<double> y;  // log-spot nodes, uniform ascending
  std::vector<double> t;  // uniform, t.back() = maturity
  std::array<std::vector<std::vector<double>>, 2> value;
  std::vector<double> s_grid;
  std::array<std::vector<std::vector<std::vector<double>>>, 2> conditional;
  bool normalized = true;
  double slope_lo = 0, slope_hi = 0;  // payoff slopes for off-grid spots

  // monotone cubic across log-spot, linear between time (and elapsed) slices,
  // payoff-slope linear in spot beyond the grid edges
  double value_at(double spot, double time, int state, double elapsed = 0) const;
};

// log-spot grid of n nodes spanning +-6 maturity-horizon volatilities of
// log S around the spot, widened to straddle the strike when one is set
std::vector<double> default_price_grid(const MarketModel& m, const OptionSpec& opt,
                                       std::size_t n_nodes = 801);

struct FundamentalOptions {
  std::size_t n_steps = 400;   // uniform time panels on [0, U]
  std::vector<double> s_grid;  // elapsed-sojourn slices, ascending, may be empty
  bool normalized = true;
  std::size_t n_tau = 16;  // prev-sojourn quadrature when velocities use it
};

// Switch-anchored renewal system integrated backward from the payoff with
// product-trapezoidal panels in the sojourn variable; expectations over the
// previous sojourn by quantile quadrature.  Exact for sojourn-dependent
// jumps; velocities that read the previous sojourn are priced under the
// renewal approximation that redraws it after every switch.
PriceSurface solve_fundamental(const MarketModel& m, const OptionSpec& opt,
                               std::vector<double> y_grid,
                               const FundamentalOptions& opts = {},
                               Exec exec = Exec::parallel);

// Backward characteristics in log-spot (exact advection) with the switching
// coupling integrated by second-order exponential time differencing.
// Requires constant velocities, jumps and rates and exponential sojourns.
PriceSurface solve_pde_constant(const MarketModel& m, const OptionSpec& opt,
                                std::vector<double> y_grid, std::size_t n_steps = 400,
                                Exec exec = Exec::parallel);

struct McPrice {
  std::array<double, 2> price{};  // per initial state
  std::array<double, 2> se{};
  std::size_t n_paths = 0;
};

// sample mean of the discounted payoff over simulated flows, one estimate
// per initial state; reproducible by seed
McPrice mc_price(const MarketModel& m, const OptionSpec& opt, std::size_t n_paths,
                 std::uint64_t seed, Exec exec = Exec::parallel);

}  // namespace tgm
