#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "tgm/volatility.hpp"

using namespace tgm;

namespace {

ProcessModel constant_model(double c0, double h0, double c1, double h1, double l0,
                            double l1) {
  ProcessModel m;
  m.switching.dist = {exponential_sojourn(l0), exponential_sojourn(l1)};
  m.regimes = {constant_regime(c0, h0), constant_regime(c1, h1)};
  return m;
}

std::vector<double> spread_times(double lo, double hi, std::size_t n) {
  std::vector<double> t(n);
  const double r = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) t[k] = lo * std::exp(r * static_cast<double>(k));
  return t;
}

}  // namespace

// ---------------- parameter shorthand ----------------

TEST_CASE("symmetric parameter shorthand derives its fields") {
  const auto p = symmetric_hv_params(5.0, 5.0, 1.0, -1.0, -0.05, 0.05);
  CHECK(p.lambda == 5.0);
  CHECK(p.c == 1.0);
  CHECK(p.B == 0.0);
  CHECK(p.b == -0.05);
  // -2c(c/lambda + h0) and -2c(c/lambda - h1): equal here by jump symmetry
  CHECK(p.gamma[0] == doctest::Approx(-0.3).epsilon(1e-14));
  CHECK(p.gamma[1] == doctest::Approx(-0.3).epsilon(1e-14));

  CHECK_THROWS_AS(symmetric_hv_params(24.0, 30.0, 1.2, 0.6, -0.05, -0.02),
                  std::invalid_argument);
  CHECK_THROWS_AS(symmetric_hv_params(5.0, 5.0, 1.0, -1.0, -1.5, 0.05),
                  std::invalid_argument);

  auto bad = p;
  bad.gamma[1] = -0.29;
  CHECK_THROWS_AS(hv_symmetric(bad, {1.0}), std::invalid_argument);
}

// ---------------- closed form ----------------

TEST_CASE("balanced symmetric jumps give a flat curve") {
  // c + lambda*h0 = 0 kills every time-dependent term
  const auto p = symmetric_hv_params(5.0, 5.0, 1.0, -1.0, -0.2, 0.2);
  const auto curve = hv_symmetric(p, {0.0, 0.01, 0.5, 2.0, 10.0, 50.0});
  const double flat = 1.0 / std::sqrt(5.0);
  for (std::size_t k = 0; k < curve.t.size(); ++k) {
    CHECK(curve.hv0[k] == doctest::Approx(flat).epsilon(1e-14));
    CHECK(curve.hv1[k] == doctest::Approx(flat).epsilon(1e-14));
  }
  CHECK(curve.limits.small_t_0 == doctest::Approx(flat).epsilon(1e-14));
  CHECK(curve.limits.small_t_1 == doctest::Approx(flat).epsilon(1e-14));
  CHECK(curve.limits.large_t == doctest::Approx(flat).epsilon(1e-14));
}

TEST_CASE("closed form extends continuously to the endpoints") {
  const auto p = symmetric_hv_params(5.0, 5.0, 1.0, -1.0, -0.05, 0.05);
  const auto curve = hv_symmetric(p, {0.0, 1e-9, 60.0});
  CHECK(curve.hv0[0] == doctest::Approx(std::sqrt(5.0) * 0.05).epsilon(1e-14));
  CHECK(curve.hv1[0] == doctest::Approx(std::sqrt(5.0) * 0.05).epsilon(1e-14));
  CHECK(curve.hv0[1] == doctest::Approx(curve.hv0[0]).epsilon(1e-6));
  CHECK(curve.hv0[2] == doctest::Approx(curve.limits.large_t).epsilon(2e-3));
  // the stationary level matches the general limit formula
  const auto lim = hv_limits(1.0, -1.0, -0.05, 0.05, 5.0, 5.0);
  CHECK(curve.limits.large_t == doctest::Approx(lim.large_t).epsilon(1e-14));
}

TEST_CASE("closed form agrees with both variance solvers") {
  const auto p = symmetric_hv_params(5.0, 5.0, 1.0, -1.0, -0.05, 0.05);
  const auto m = constant_model(1.0, -0.05, -1.0, 0.05, 5.0, 5.0);

  const auto t_long = spread_times(0.01, 50.0, 25);
  const auto exact = hv_symmetric(p, t_long);
  const auto resolvent = hv_curve(m, t_long, SolveMethod::closed_form_exp);
  double worst = 0;
  for (std::size_t k = 0; k < t_long.size(); ++k) {
    worst = std::max(worst, std::abs(resolvent.hv0[k] - exact.hv0[k]));
    worst = std::max(worst, std::abs(resolvent.hv1[k] - exact.hv1[k]));
  }
  CHECK(worst <= 1e-7);  // 1.1e-8 measured; the forcing integrals set the floor

  const auto t_short = spread_times(0.05, 4.0, 12);
  const auto grid = hv_curve(m, t_short, SolveMethod::grid, 4096);
  const auto want = hv_symmetric(p, t_short);
  for (std::size_t k = 0; k < t_short.size(); ++k) {
    CHECK(grid.hv0[k] == doctest::Approx(want.hv0[k]).epsilon(1e-5));
    CHECK(grid.hv1[k] == doctest::Approx(want.hv1[k]).epsilon(1e-5));
  }
}

// ---------------- limits ----------------

TEST_CASE("limit formulas evaluate and enforce the velocity ordering") {
  const auto lim = hv_limits(1.2, 0.6, -0.05, -0.02, 15.0, 15.0);
  CHECK(lim.small_t_0 == doctest::Approx(std::sqrt(15.0) * 0.05).epsilon(1e-14));
  CHECK(lim.small_t_1 == doctest::Approx(std::sqrt(15.0) * 0.02).epsilon(1e-14));

  // lambda = 15, B = -0.035, c = 0.3
  const double a0 = 15.0 * -0.035 + 0.3, a1 = 15.0 * -0.035 - 0.3;
  const double want = std::sqrt(225.0 / (2.0 * 15.0 * 15.0 * 15.0) * (a0 * a0 + a1 * a1));
  CHECK(lim.large_t == doctest::Approx(want).epsilon(1e-14));

  CHECK_THROWS_AS(hv_limits(0.6, 1.2, -0.05, -0.02, 15.0, 15.0), std::invalid_argument);
  CHECK_THROWS_AS(hv_limits(1.2, 0.6, -0.05, -0.02, 0.0, 15.0), std::invalid_argument);
}

TEST_CASE("general curve approaches its attached limits") {
  const auto m = constant_model(1.2, -0.05, 0.6, -0.02, 24.0, 30.0);
  const auto curve =
      hv_curve(m, {1e-4, 1e-3, 0.25, 1.0, 4.0, 50.0}, SolveMethod::closed_form_exp);

  const auto lim = hv_limits(1.2, 0.6, -0.05, -0.02, 24.0, 30.0);
  CHECK(curve.limits.small_t_0 == doctest::Approx(lim.small_t_0).epsilon(1e-14));
  CHECK(curve.limits.small_t_1 == doctest::Approx(lim.small_t_1).epsilon(1e-14));
  CHECK(curve.limits.large_t == doctest::Approx(lim.large_t).epsilon(1e-14));

  CHECK(std::abs(curve.hv0[1] - std::sqrt(24.0) * 0.05) <= 0.01 * curve.limits.small_t_0);
  // the second state starts from a smaller origin level, so its relative
  // drift is faster and the same 1% band needs an earlier probe
  CHECK(std::abs(curve.hv1[0] - std::sqrt(30.0) * 0.02) <= 0.01 * curve.limits.small_t_1);
  CHECK(std::abs(curve.hv0.back() - lim.large_t) <= 0.02 * lim.large_t);
  CHECK(std::abs(curve.hv1.back() - lim.large_t) <= 0.02 * lim.large_t);
  for (std::size_t k = 0; k < curve.t.size(); ++k) {
    CHECK(curve.hv0[k] > 0.0);
    CHECK(std::isfinite(curve.hv0[k]));
  }
}

TEST_CASE("curve values sit inside monte carlo bands") {
  const auto m = constant_model(1.2, -0.05, 0.6, -0.02, 24.0, 30.0);
  const std::vector<double> times = {0.25, 1.0, 4.0};
  const auto curve = hv_curve(m, times, SolveMethod::closed_form_exp);

  const auto sim = mc_path_moments(m.switching, m.regimes, times, 100000, 8181);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double hv_mc = std::sqrt(sim.var[k] / times[k]);
    const double se_hv = sim.se_var[k] / (2.0 * hv_mc * times[k]);
    CHECK(std::abs(curve.hv0[k] - hv_mc) <= 3.0 * se_hv);
  }
}

// ---------------- variable regimes ----------------

TEST_CASE("grid curves track monte carlo for time-varying regimes") {
  const std::vector<double> times = {0.5, 1.0, 2.0, 5.0, 10.0};

  SUBCASE("decaying velocities and jumps") {
    ProcessModel m;
    m.switching.dist = {exponential_sojourn(24.0), exponential_sojourn(30.0)};
    m.regimes = {hyperbolic_regime(1.2, -0.05), hyperbolic_regime(0.6, -0.02)};
    const auto curve = hv_curve(m, times, SolveMethod::grid, 2048);
    CHECK(std::isnan(curve.limits.small_t_0));
    CHECK(std::isnan(curve.limits.large_t));

    const auto sim = mc_path_moments(m.switching, m.regimes, times, 20000, 5151);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double hv_mc = std::sqrt(sim.var[k] / times[k]);
      const double se_hv = sim.se_var[k] / (2.0 * hv_mc * times[k]);
      CHECK(std::abs(curve.hv0[k] - hv_mc) <= 3.0 * se_hv + 1e-4);
    }
  }

  SUBCASE("ramping velocities and jumps") {
    ProcessModel m;
    m.switching.dist = {exponential_sojourn(25.0), exponential_sojourn(20.0)};
    m.switching.initial_state = 1;
    m.regimes = {linear_regime(-0.5, 0.02), linear_regime(-1.0, 0.05)};
    const auto curve = hv_curve(m, times, SolveMethod::grid, 2048);

    const auto sim = mc_path_moments(m.switching, m.regimes, times, 20000, 6262);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double hv_mc = std::sqrt(sim.var[k] / times[k]);
      const double se_hv = sim.se_var[k] / (2.0 * hv_mc * times[k]);
      CHECK(std::abs(curve.hv1[k] - hv_mc) <= 3.0 * se_hv + 1e-4);
    }
  }
}

// ---------------- moving-average benchmark ----------------

TEST_CASE("moving-average curve spans sigma down to its stationary level") {
  const auto curve = hv_moving_average(0.4, 3.0, 2.0, {0.0, 1e-6, 1.0, 1e9});
  CHECK(curve.hv0[0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(curve.hv0[1] == doctest::Approx(0.4).epsilon(1e-5));
  CHECK(curve.hv0.back() == doctest::Approx(0.4 * 2.0 / 5.0).epsilon(1e-8));
  CHECK(curve.limits.small_t_0 == 0.4);
  CHECK(curve.limits.large_t == doctest::Approx(0.16).epsilon(1e-14));
  for (std::size_t k = 0; k + 1 < curve.t.size(); ++k)
    CHECK(curve.hv0[k + 1] <= curve.hv0[k] + 1e-15);
  CHECK(curve.hv1 == curve.hv0);

  // a zero mean-reversion weight degenerates to a constant
  const auto flat = hv_moving_average(0.4, 0.0, 2.0, {0.1, 1.0, 10.0});
  for (double v : flat.hv0) CHECK(v == doctest::Approx(0.4).epsilon(1e-14));

  // negative lambda0 is allowed and pushes the level above sigma
  const auto up = hv_moving_average(0.4, -1.0, 3.0, {0.0, 1.0, 1e9});
  CHECK(up.hv0[0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(up.hv0.back() == doctest::Approx(0.6).epsilon(1e-8));
  for (std::size_t k = 0; k + 1 < up.t.size(); ++k) CHECK(up.hv0[k + 1] >= up.hv0[k]);

  CHECK_THROWS_AS(hv_moving_average(0.4, 3.0, 0.0, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(hv_moving_average(0.4, -3.0, 2.0, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(hv_moving_average(0.0, 3.0, 2.0, {1.0}), std::invalid_argument);
}

// ---------------- validation ----------------

TEST_CASE("curve construction rejects bad grids and laws") {
  const auto m = constant_model(1.0, -0.05, -1.0, 0.05, 5.0, 5.0);
  CHECK_THROWS_AS(hv_curve(m, {}, SolveMethod::closed_form_exp), std::invalid_argument);
  CHECK_THROWS_AS(hv_curve(m, {0.0, 1.0}, SolveMethod::closed_form_exp),
                  std::invalid_argument);
  CHECK_THROWS_AS(hv_curve(m, {1.0, 0.5}, SolveMethod::closed_form_exp),
                  std::invalid_argument);

  auto weib = m;
  weib.switching.dist[0] = weibull_sojourn(1.5, 0.4);
  CHECK_THROWS_AS(hv_curve(weib, {1.0}, SolveMethod::closed_form_exp),
                  std::invalid_argument);

  // constant regimes in the wrong order still get origin limits attached
  const auto swapped = constant_model(0.6, -0.02, 1.2, -0.05, 15.0, 15.0);
  const auto curve = hv_curve(swapped, {0.5, 1.0}, SolveMethod::closed_form_exp);
  CHECK(curve.limits.small_t_0 == doctest::Approx(std::sqrt(15.0) * 0.02));
  CHECK(std::isnan(curve.limits.large_t));
}
