#include "tgm/moments.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "tgm/math.hpp"

namespace tgm {

namespace {

double sq(double x) { return x * x; }

// nodes and weights for expectations over tau ~ f: mass-exact trapezoid
// weights on a uniform grid covering the support
struct TauQuad {
  std::vector<double> tau, w;
};

TauQuad tau_quadrature(const SojournDistribution& d, std::size_t n) {
  const double dt = d.support_truncation / static_cast<double>(n);
  const auto pw = product_weights(sojourn_kernel(d), dt, n);
  TauQuad q;
  q.tau.resize(n + 1);
  q.w.assign(n + 1, 0.0);
  for (std::size_t k = 0; k <= n; ++k) q.tau[k] = dt * static_cast<double>(k);
  for (std::size_t k = 0; k < pw.w0.size(); ++k) {
    q.w[k] += pw.w0[k];
    q.w[k + 1] += pw.w1[k];
  }
  return q;
}

// true when the density blows up at the origin (then integrals against it
// are done in the mass coordinate or on graded panels, never at u = 0)
bool density_singular_at_zero(const SojournDistribution& d) {
  const double v = d.density(1e-30);  // small enough to expose a blow-up,
                                      // large enough to stay representable
  return !(v < 1e10);                 // routes NaN and inf here too
}

// int_a^t f(u) g(u) du with panels graded toward u = a where the density may
// blow up; the innermost sliver is handled as exact mass times a point value
double integrate_against_density(const SojournDistribution& d, double a, double t,
                                 const std::function<double(double)>& g) {
  const double span = t - a;
  if (!(span > 0)) return 0.0;
  constexpr int kLevels = 45;
  constexpr double kRatio = 0.65;
  const auto& gl = gauss_legendre(7);
  double lo = a + span * std::pow(kRatio, kLevels);
  double acc = (d.survival(a) - d.survival(lo)) * g(0.5 * (a + lo));
  for (int j = kLevels - 1; j >= 0; --j) {
    const double hi = a + span * std::pow(kRatio, j);
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t q = 0; q < gl.x.size(); ++q) {
      const double u = mid + half * gl.x[q];
      acc += half * gl.w[q] * d.density(u) * g(u);
    }
    lo = hi;
  }
  return acc;
}

// two cubics sharing one callable: a dense one across the initial transient
// and a wider one to the horizon
struct TwoScale {
  UniformCubic inner, outer;
  double split = 0;
  bool has_outer = false;

  double operator()(double t) const {
    return (!has_outer || t <= split) ? inner(t) : outer(t);
  }
};

TwoScale two_scale_from(const std::function<double(double)>& f, double split, double t_max,
                        std::size_t n_inner, std::size_t n_outer) {
  TwoScale ts;
  ts.split = std::min(split, t_max);
  {
    std::vector<double> y(n_inner + 1);
    const double dt = ts.split / static_cast<double>(n_inner);
    for (std::size_t k = 0; k <= n_inner; ++k) y[k] = f(dt * static_cast<double>(k));
    ts.inner = UniformCubic(0.0, dt, std::move(y));
  }
  if (ts.split < t_max) {
    ts.has_outer = true;
    std::vector<double> y(n_outer + 1);
    const double dt = t_max / static_cast<double>(n_outer);
    for (std::size_t k = 0; k <= n_outer; ++k) y[k] = f(dt * static_cast<double>(k));
    ts.outer = UniformCubic(0.0, dt, std::move(y));
  }
  return ts;
}

}  // namespace

RegimeCurves build_regime_curves(const ProcessModel& m, double t_max, std::size_t n_tau,
                                 std::size_t n_fine) {
  require(t_max > 0, "build_regime_curves: bad horizon");
  require(n_tau >= 8 && n_fine >= 32, "build_regime_curves: quadrature sizes too small");
  RegimeCurves rc;
  rc.t_max = t_max;
  for (int i = 0; i < 2; ++i) {
    const RegimeSpec& re = m.regimes[i];
    require(static_cast<bool>(re.velocity) && static_cast<bool>(re.jump),
            "build_regime_curves: regime callables missing");
    rc.jump[i] = re.jump;
    rc.prev_dependent[i] = re.velocity_depends_on_prev;

    if (!re.velocity_depends_on_prev) {
      rc.mean_velocity[i] = [vel = re.velocity](double s) { return vel(0.0, s); };
      if (re.antiderivative) {
        rc.mean_displacement[i] = [A = re.antiderivative](double s) { return A(0.0, s); };
      } else {
        auto cum = std::make_shared<CumulativeCurve>(
            [vel = re.velocity](double s) { return vel(0.0, s); },
            uniform_grid(0.0, t_max, n_fine + 1));
        rc.mean_displacement[i] = [cum](double s) { return (*cum)(s); };
      }
      rc.displacement_variance[i] = [](double) { return 0.0; };
      continue;
    }

    auto q = std::make_shared<TauQuad>(tau_quadrature(m.switching.dist[1 - i], n_tau));
    rc.mean_velocity[i] = [q, vel = re.velocity](double s) {
      double acc = 0;
      for (std::size_t j = 0; j < q->tau.size(); ++j) acc += q->w[j] * vel(q->tau[j], s);
      return acc;
    };

    if (re.antiderivative) {
      auto A = re.antiderivative;
      rc.mean_displacement[i] = [q, A](double s) {
        double acc = 0;
        for (std::size_t j = 0; j < q->tau.size(); ++j) acc += q->w[j] * A(q->tau[j], s);
        return acc;
      };
      rc.displacement_variance[i] = [q, A](double s) {
        double mean = 0;
        for (std::size_t j = 0; j < q->tau.size(); ++j) mean += q->w[j] * A(q->tau[j], s);
        double acc = 0;
        for (std::size_t j = 0; j < q->tau.size(); ++j)
          acc += q->w[j] * sq(A(q->tau[j], s) - mean);
        return acc;
      };
    } else {
      // march the per-node displacements across the fine grid once
      const auto& g5 = gauss_legendre(5);
      const double dt = t_max / static_cast<double>(n_fine);
      const std::size_t n_nodes = q->tau.size();
      std::vector<double> aj(n_nodes, 0.0);
      std::vector<double> lbar(n_fine + 1, 0.0), var(n_fine + 1, 0.0);
      for (std::size_t k = 0; k < n_fine; ++k) {
        const double a = dt * static_cast<double>(k);
        for (std::size_t j = 0; j < n_nodes; ++j) {
          double inc = 0;
          for (std::size_t p = 0; p < g5.x.size(); ++p)
            inc += g5.w[p] * re.velocity(q->tau[j], a + 0.5 * dt * (1.0 + g5.x[p]));
          aj[j] += 0.5 * dt * inc;
        }
        double mean = 0;
        for (std::size_t j = 0; j < n_nodes; ++j) mean += q->w[j] * aj[j];
        double vv = 0;
        for (std::size_t j = 0; j < n_nodes; ++j) vv += q->w[j] * sq(aj[j] - mean);
        lbar[k + 1] = mean;
        var[k + 1] = vv;
      }
      auto lb = std::make_shared<UniformCubic>(0.0, dt, std::move(lbar));
      auto va = std::make_shared<UniformCubic>(0.0, dt, std::move(var));
      rc.mean_displacement[i] = [lb](double s) { return (*lb)(s); };
      rc.displacement_variance[i] = [va](double s) { return std::max(0.0, (*va)(s)); };
    }
  }
  return rc;
}

MeanForcing mean_forcing(const ProcessModel& m, const RegimeCurves& curves, double t_max) {
  require(t_max > 0 && t_max <= curves.t_max * (1.0 + 1e-12),
          "mean_forcing: horizon beyond curves");
  MeanForcing out;
  for (int i = 0; i < 2; ++i) {
    const auto& d = m.switching.dist[i];
    auto surv = d.survival;
    auto cbar = curves.mean_velocity[i];
    const auto grid = uniform_grid(0.0, t_max, 2049);
    auto c1 = std::make_shared<CumulativeCurve>(
        [surv, cbar](double s) { return surv(s) * cbar(s); }, grid);

    // jump part int_0^t h f du: same panels as c1 when the density is
    // bounded (so martingale integrands cancel node by node), otherwise in
    // the mass coordinate int_0^{F(t)} h(Q(v)) dv
    std::function<double(double)> jump_part;
    if (!density_singular_at_zero(d)) {
      auto c2 = std::make_shared<CumulativeCurve>(
          [dens = d.density, h = curves.jump[i]](double u) { return dens(u) * h(u); }, grid);
      jump_part = [c2](double t) { return (*c2)(t); };
    } else {
      const double vmax = std::min(1.0 - surv(t_max), 1.0 - 1e-12);
      auto c2 = std::make_shared<CumulativeCurve>(
          [quant = d.quantile, h = curves.jump[i]](double v) { return h(quant(v)); },
          uniform_grid(0.0, vmax, 2049));
      jump_part = [c2, surv, vmax](double t) {
        return (*c2)(std::clamp(1.0 - surv(t), 0.0, vmax));
      };
    }

    auto a = [c1, jump_part, t_max](double t) {
      require(t >= -1e-300 && t <= t_max * (1.0 + 1e-12) + 1e-300,
              "mean forcing: time beyond horizon");
      const double tc = std::clamp(t, 0.0, t_max);
      return (*c1)(tc) + jump_part(tc);
    };
    out.a[i] = a;
    out.conditional[i] = [a, surv, lbar = curves.mean_displacement[i]](double t, double s) {
      require(s >= 0 && t >= s, "conditional mean forcing: need 0 <= s <= t");
      const double fs = surv(s);
      require(fs > 1e-300, "conditional mean forcing: survival underflow at the elapsed time");
      return lbar(s) + (a(t) - a(s)) / fs;
    };
  }
  return out;
}

std::array<std::vector<double>, 2> variance_forcing_grid(
    const ProcessModel& m, const RegimeCurves& curves,
    const std::array<std::vector<double>, 2>& mu, double t_max, VarianceMode mode, Exec exec) {
  require(mu[0].size() == mu[1].size() && mu[0].size() >= 2, "variance_forcing_grid: bad grids");
  const std::size_t n = mu[0].size() - 1;
  const double dt = t_max / static_cast<double>(n);
  const bool exact = mode == VarianceMode::exact;

  std::array<std::vector<double>, 2> b;
  for (int i = 0; i < 2; ++i) {
    const auto& d = m.switching.dist[i];
    const auto pw = product_weights(sojourn_kernel(d), dt, n);

    std::vector<double> lb(n + 1), va(n + 1), hh(n + 1), fb(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      const double u = dt * static_cast<double>(k);
      lb[k] = curves.mean_displacement[i](u);
      va[k] = exact ? curves.displacement_variance[i](u) : 0.0;
      hh[k] = curves.jump[i](u);
      fb[k] = d.survival(u);
    }

    const auto& mu_own = mu[i];
    const auto& mu_oth = mu[1 - i];
    b[i].assign(n + 1, 0.0);
    auto& out = b[i];
    parallel_for(n + 1, exec, [&](std::size_t idx) {
      const double mu_t = mu_own[idx];
      double acc = fb[idx] * (va[idx] + sq(lb[idx] - mu_t));
      const std::size_t kmax = std::min(idx, pw.w0.size());
      for (std::size_t k = 0; k < kmax; ++k) {
        const double q0 = va[k] + sq(lb[k] + hh[k] + mu_oth[idx - k] - mu_t);
        const double q1 = va[k + 1] + sq(lb[k + 1] + hh[k + 1] + mu_oth[idx - k - 1] - mu_t);
        acc += pw.w0[k] * q0 + pw.w1[k] * q1;
      }
      out[idx] = acc;
    });
  }
  return b;
}

namespace {

// pointwise variance forcing for the closed-form route (exponential sojourns)
double variance_forcing_point(double t, double mu_t, double lambda_i, double truncation,
                              const std::function<double(double)>& lb,
                              const std::function<double(double)>& va,
                              const std::function<double(double)>& h,
                              const TwoScale& mu_other, bool exact) {
  double acc = std::exp(-lambda_i * t) * ((exact ? va(t) : 0.0) + sq(lb(t) - mu_t));
  const double umax = std::min(t, truncation);
  if (!(umax > 0)) return acc;
  const auto npan = static_cast<std::size_t>(std::max(1.0, std::ceil(umax * 2.0 * lambda_i)));
  const double w = umax / static_cast<double>(npan);
  const auto& gl = gauss_legendre(8);
  for (std::size_t p = 0; p < npan; ++p) {
    const double a = w * static_cast<double>(p);
    for (std::size_t q = 0; q < gl.x.size(); ++q) {
      const double u = a + 0.5 * w * (1.0 + gl.x[q]);
      const double f = lambda_i * std::exp(-lambda_i * u);
      const double bracket = lb(u) + h(u) + mu_other(t - u) - mu_t;
      acc += 0.5 * w * gl.w[q] * f * ((exact ? va(u) : 0.0) + sq(bracket));
    }
  }
  return acc;
}

void clamp_variances(MomentCurves& mc) {
  double scale = 0;
  for (int i = 0; i < 2; ++i)
    for (double v : mc.sigma[i]) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < 2; ++i)
    for (auto& v : mc.sigma[i]) {
      require_numeric(v >= -1e-8 * std::max(1.0, scale),
                      "moment solve: variance went negative beyond roundoff");
      v = std::max(v, 0.0);
    }
}

MomentCurves closed_route(const ProcessModel& m, double t_max, std::vector<double> times,
                          VarianceMode mode) {
  require(m.switching.dist[0].exp_rate && m.switching.dist[1].exp_rate,
          "moment closed form: needs exponential sojourns on both states");
  const double l0 = *m.switching.dist[0].exp_rate;
  const double l1 = *m.switching.dist[1].exp_rate;
  const double lambda[2] = {l0, l1};
  const bool exact = mode == VarianceMode::exact;

  const auto curves = build_regime_curves(m, t_max);
  const auto forcing = mean_forcing(m, curves, t_max);

  MomentCurves out;
  out.t = std::move(times);
  out.mu = exp_kernel_solution(l0, l1, forcing.a[0], forcing.a[1], out.t);

  // dense transient grid plus a wide grid to the horizon, for interpolation
  const double split = std::min(t_max, 16.0 / (l0 + l1));
  const std::size_t n_inner = 4096, n_outer = 16384;

  std::array<TwoScale, 2> mu_ts;
  {
    const auto inner_grid = uniform_grid(0.0, split, n_inner + 1);
    const auto mu_inner = exp_kernel_solution(l0, l1, forcing.a[0], forcing.a[1], inner_grid);
    for (std::size_t i = 0; i < 2; ++i) {
      mu_ts[i].split = split;
      mu_ts[i].inner = UniformCubic(0.0, split / n_inner, mu_inner[i]);
    }
    if (split < t_max) {
      const auto outer_grid = uniform_grid(0.0, t_max, n_outer + 1);
      const auto mu_outer = exp_kernel_solution(l0, l1, forcing.a[0], forcing.a[1], outer_grid);
      for (std::size_t i = 0; i < 2; ++i) {
        mu_ts[i].outer = UniformCubic(0.0, t_max / n_outer, mu_outer[i]);
        mu_ts[i].has_outer = true;
      }
    }
  }

  // tabulate the tau-averaged curves when averaging is expensive
  std::array<std::function<double(double)>, 2> lb = curves.mean_displacement;
  std::array<std::function<double(double)>, 2> va = curves.displacement_variance;
  for (int i = 0; i < 2; ++i) {
    if (!curves.prev_dependent[i]) continue;
    auto lb_ts = std::make_shared<TwoScale>(
        two_scale_from(curves.mean_displacement[i], split, t_max, n_inner, n_outer));
    auto va_ts = std::make_shared<TwoScale>(
        two_scale_from(curves.displacement_variance[i], split, t_max, n_inner, n_outer));
    lb[i] = [lb_ts](double s) { return (*lb_ts)(s); };
    va[i] = [va_ts](double s) { return std::max(0.0, (*va_ts)(s)); };
  }

  std::array<TwoScale, 2> b_ts;
  for (std::size_t i = 0; i < 2; ++i) {
    b_ts[i] = two_scale_from(
        [&, i](double t) {
          return variance_forcing_point(t, mu_ts[i](t), lambda[i],
                                        m.switching.dist[i].support_truncation, lb[i], va[i],
                                        curves.jump[i], mu_ts[1 - i], exact);
        },
        split, t_max, n_inner, n_outer);
  }

  out.sigma = exp_kernel_solution(
      l0, l1, [&](double t) { return b_ts[0](t); }, [&](double t) { return b_ts[1](t); },
      out.t);

  clamp_variances(out);
  return out;
}

}  // namespace

MomentCurves moment_curves(const ProcessModel& m, double t_max, std::size_t n_steps,
                           SolveMethod method, VarianceMode mode, Exec exec) {
  require(t_max > 0 && n_steps >= 2, "moment_curves: bad grid");
  if (method == SolveMethod::closed_form_exp)
    return closed_route(m, t_max, uniform_grid(0.0, t_max, n_steps + 1), mode);

  const auto curves = build_regime_curves(m, t_max);
  const auto forcing = mean_forcing(m, curves, t_max);

  MomentCurves out;
  out.t = uniform_grid(0.0, t_max, n_steps + 1);
  const std::array<VolterraKernel, 2> kernels = {sojourn_kernel(m.switching.dist[0]),
                                                 sojourn_kernel(m.switching.dist[1])};
  std::array<std::vector<double>, 2> a;
  for (int i = 0; i < 2; ++i) {
    a[i].resize(out.t.size());
    for (std::size_t k = 0; k < out.t.size(); ++k) a[i][k] = forcing.a[i](out.t[k]);
  }
  out.mu = solve_volterra_pair(kernels, a, t_max).g;
  const auto b = variance_forcing_grid(m, curves, out.mu, t_max, mode, exec);
  out.sigma = solve_volterra_pair(kernels, b, t_max).g;
  clamp_variances(out);
  return out;
}

MomentCurves moment_values(const ProcessModel& m, const std::vector<double>& times,
                           VarianceMode mode) {
  require(!times.empty(), "moment_values: no times");
  require(times.front() >= 0, "moment_values: negative time");
  for (std::size_t k = 1; k < times.size(); ++k)
    require(times[k] >= times[k - 1], "moment_values: times must be nondecreasing");
  require(times.back() > 0, "moment_values: zero horizon");
  return closed_route(m, times.back(), times, mode);
}

std::array<std::vector<double>, 2> conditional_mean(const ProcessModel& m,
                                                    const MeanForcing& forcing,
                                                    const MomentCurves& unconditional,
                                                    double s,
                                                    const std::vector<double>& t_out) {
  require(s >= 0, "conditional_mean: negative elapsed time");
  const auto& grid = unconditional.t;
  require(grid.size() >= 2 && is_uniform(grid), "conditional_mean: need a uniform base grid");
  const double dt = grid[1] - grid[0];
  std::array<UniformCubic, 2> mu_cub = {UniformCubic(0.0, dt, unconditional.mu[0]),
                                        UniformCubic(0.0, dt, unconditional.mu[1])};

  std::array<std::vector<double>, 2> out;
  for (int i = 0; i < 2; ++i) {
    const auto& d = m.switching.dist[i];
    const double fs = d.survival(s);
    require(fs > 1e-300, "conditional_mean: survival underflow at the elapsed time");
    out[i].resize(t_out.size());
    const auto& mu_other = mu_cub[1 - i];
    for (std::size_t k = 0; k < t_out.size(); ++k) {
      const double t = t_out[k];
      require(t >= s && t <= grid.back() * (1 + 1e-12), "conditional_mean: time out of range");
      const double integral =
          integrate_against_density(d, s, t, [&](double u) { return mu_other(t - u); });
      out[i][k] = forcing.conditional[i](t, s) + integral / fs;
    }
  }
  return out;
}

}  // namespace tgm
