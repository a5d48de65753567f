#include <doctest.h>

#include <cmath>
#include <vector>

#include "stat_util.hpp"
#include "tgm/math.hpp"
#include "tgm/mc.hpp"
#include "tgm/path.hpp"

using namespace tgm;

TEST_CASE("segment displacements match closed forms") {
  SUBCASE("constant velocity") {
    auto r = constant_regime(1.2, -0.05);
    CHECK(segment_displacement(r, 0.7, 0.5, 1.7, 0.2) == doctest::Approx(1.44).epsilon(1e-14));
    CHECK(r.jump(123.0) == -0.05);
    CHECK_FALSE(r.velocity_depends_on_prev);
  }
  SUBCASE("hyperbolic velocity") {
    auto r = hyperbolic_regime(1.2, -0.05);
    const double o = 0.5;
    const double want = std::log(1.0 + 1.2 * 1.2);  // over [0.5, 1.7] from origin 0.5
    CHECK(segment_displacement(r, 0.3, 0.5, 1.7, o) == doctest::Approx(want).epsilon(1e-12));
    CHECK(r.jump(2.0) == doctest::Approx(-0.05 / (1.0 + 1.2 * 2.0)).epsilon(1e-14));

    // adaptive fallback (no antiderivative) agrees to quadrature accuracy
    auto bare = r;
    bare.antiderivative = nullptr;
    CHECK(segment_displacement(bare, 0.3, 0.5, 1.7, o) ==
          doctest::Approx(want).epsilon(1e-10));
  }
  SUBCASE("linear velocity") {
    auto r = linear_regime(-0.5, 0.02);
    // A(t) = -0.25 t^2 in local time
    const double want = -0.25 * (1.2 * 1.2 - 0.3 * 0.3);
    CHECK(segment_displacement(r, 0.1, 0.8, 1.7, 0.5) == doctest::Approx(want).epsilon(1e-12));
    CHECK(r.jump(0.4) == doctest::Approx(0.008).epsilon(1e-14));
  }
  SUBCASE("tabulated velocity surface") {
    auto r = table_regime({0.0, 1.0}, {0.0, 2.0}, {{1.0, 1.0}, {2.0, 2.0}},
                          {0.0, 1.0}, {0.1, 0.3});
    CHECK(r.velocity(0.5, 0.7) == doctest::Approx(1.5));
    CHECK(r.velocity(2.5, 0.7) == doctest::Approx(2.0));  // clamped in T
    CHECK(r.jump(0.5) == doctest::Approx(0.2));
    CHECK(r.velocity_depends_on_prev);
    CHECK(segment_displacement(r, 0.5, 0.0, 2.0, 0.0) == doctest::Approx(3.0).epsilon(1e-9));

    auto flat = table_regime({0.0, 1.0}, {0.0, 2.0}, {{1.0, 3.0}, {1.0, 3.0}},
                             {0.0, 1.0}, {0.0, 0.0});
    CHECK_FALSE(flat.velocity_depends_on_prev);
  }
}

TEST_CASE("path values on a hand-built flow") {
  SwitchingFlow flow;
  flow.initial_state = 0;
  flow.horizon = 2.0;
  flow.prev_sojourn = 0.3;
  flow.switch_times = {0.4, 1.1};
  flow.censored_next = 2.5;

  RegimePair regimes = {constant_regime(1.0, -0.05), constant_regime(-1.0, 0.05)};

  auto jumps = jump_events(flow, regimes);
  REQUIRE(jumps.size() == 2);
  CHECK(jumps[0].time == 0.4);
  CHECK(jumps[0].exiting_state == 0);
  CHECK(jumps[0].sojourn == doctest::Approx(0.4));
  CHECK(jumps[0].amplitude == doctest::Approx(-0.05));
  CHECK(jumps[1].time == 1.1);
  CHECK(jumps[1].exiting_state == 1);
  CHECK(jumps[1].sojourn == doctest::Approx(0.7));
  CHECK(jumps[1].amplitude == doctest::Approx(0.05));

  auto x = path_values(flow, regimes, {0.0, 0.2, 0.4, 1.0, 1.1, 2.0});
  CHECK(x[0] == doctest::Approx(0.0));
  CHECK(x[1] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(x[2] == doctest::Approx(0.35).epsilon(1e-14));   // right-continuous: after the jump
  CHECK(x[3] == doctest::Approx(-0.25).epsilon(1e-13));
  CHECK(x[4] == doctest::Approx(-0.30).epsilon(1e-13));
  CHECK(x[5] == doctest::Approx(0.60).epsilon(1e-13));
}

TEST_CASE("simulated path bookkeeping is self-consistent") {
  SwitchingModel m;
  m.dist = {gamma_sojourn(2.0, 6.0), exponential_sojourn(4.0)};
  RegimePair regimes = {hyperbolic_regime(1.2, -0.05), hyperbolic_regime(0.6, -0.02)};

  auto rec = simulate_path(m, regimes, 3.0, uniform_grid(0.0, 3.0, 60), 2024);
  REQUIRE(!rec.flow.switch_times.empty());
  REQUIRE(rec.jumps.size() == rec.flow.switch_times.size());
  REQUIRE(rec.x_switch_pre.size() == rec.jumps.size());
  for (std::size_t n = 0; n < rec.jumps.size(); ++n) {
    CHECK(rec.x_switch_post[n] - rec.x_switch_pre[n] ==
          doctest::Approx(rec.jumps[n].amplitude).epsilon(1e-12));
  }
  // grid values agree with a fresh evaluation on the same flow
  auto again = path_values(rec.flow, regimes, rec.times);
  for (std::size_t i = 0; i < again.size(); ++i) CHECK(rec.x[i] == again[i]);
}

// The restarted process after the first switch, with the completed sojourn
// pinned, must reproduce the law of the original process beyond that switch.
TEST_CASE("distributional recursion at the first switch") {
  SwitchingModel m;
  m.dist = {gamma_sojourn(2.0, 4.0), weibull_sojourn(1.3, 0.5)};
  m.initial_state = 0;

  RegimePair regimes;
  regimes[0].velocity = [](double T, double u) { return 0.5 * T + 0.2 * u; };
  regimes[0].antiderivative = [](double T, double t) { return 0.5 * T * t + 0.1 * t * t; };
  regimes[0].jump = [](double T) { return -0.1 * T; };
  regimes[0].velocity_depends_on_prev = true;
  regimes[1].velocity = [](double T, double) { return -0.8 + 0.3 * T; };
  regimes[1].antiderivative = [](double T, double t) { return (-0.8 + 0.3 * T) * t; };
  regimes[1].jump = [](double T) { return 0.05 + 0.02 * T; };
  regimes[1].velocity_depends_on_prev = true;

  const double t = 1.2;
  const std::size_t n = 10000;

  std::vector<double> direct(n), assembled(n);
  for (std::size_t r = 0; r < n; ++r)
    direct[r] = simulate_path(m, regimes, t, {t}, 31337, r).x.back();

  for (std::size_t r = 0; r < n; ++r) {
    Rng rng(91, r);
    const double T0 = m.dist[1].sample(rng);
    const double tau1 = m.dist[0].sample(rng);
    if (tau1 >= t) {
      assembled[r] = segment_displacement(regimes[0], T0, 0.0, t, 0.0);
    } else {
      SwitchingModel restarted = m;
      restarted.initial_state = 1;
      restarted.fixed_prev_sojourn = tau1;
      const double tail =
          simulate_path(restarted, regimes, t - tau1, {t - tau1}, 555, r).x.back();
      assembled[r] = segment_displacement(regimes[0], T0, 0.0, tau1, 0.0) +
                     regimes[0].jump(tau1) + tail;
    }
  }

  CHECK(ks_two_sample(direct, assembled) < ks_crit_two(n, n));
}

TEST_CASE("monte carlo moments: serial and parallel agree exactly") {
  SwitchingModel m;
  m.dist = {exponential_sojourn(3.0), exponential_sojourn(7.0)};
  RegimePair regimes = {constant_regime(1.0, -0.05), constant_regime(-1.0, 0.05)};
  const std::vector<double> times = {0.25, 0.5, 1.0};

  auto s = mc_path_moments(m, regimes, times, 500, 99, Exec::serial);
  auto p = mc_path_moments(m, regimes, times, 500, 99, Exec::parallel);
  REQUIRE(s.mean.size() == times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(s.mean[i] == p.mean[i]);
    CHECK(s.var[i] == p.var[i]);
    CHECK(s.se_mean[i] == p.se_mean[i]);
    CHECK(s.se_var[i] == p.se_var[i]);
  }

  auto term = mc_terminal_values(m, regimes, 1.0, 500, 99);
  long double acc = 0;
  for (double v : term) acc += v;
  CHECK(static_cast<double>(acc / term.size()) == doctest::Approx(s.mean[2]).epsilon(1e-13));
}

TEST_CASE("degenerate regimes give a deterministic path") {
  SwitchingModel m;
  m.dist = {exponential_sojourn(5.0), exponential_sojourn(5.0)};
  RegimePair regimes = {constant_regime(2.0, 0.0), constant_regime(2.0, 0.0)};
  auto mm = mc_path_moments(m, regimes, {0.5, 1.0}, 200, 7);
  CHECK(mm.mean[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mm.mean[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(mm.var[0] == doctest::Approx(0.0).epsilon(1e-18));
  CHECK(mm.var[1] == doctest::Approx(0.0).epsilon(1e-18));
}
