#include "tgm/volatility.hpp"

#include <algorithm>
#include <cmath>

#include "tgm/math.hpp"

namespace tgm {

namespace {

// (1 - e^{-2 lam t}) / (2 lam t), continuously extended to 1 at t = 0
double phi_over_t(double lam, double t) {
  const double z = 2.0 * lam * t;
  if (z == 0.0) return 1.0;
  return -std::expm1(-z) / z;
}

void check_times(const std::vector<double>& t, bool allow_zero, const char* who) {
  require(!t.empty(), std::string(who) + ": empty time grid");
  double last = allow_zero ? -1.0 : 0.0;
  for (double v : t) {
    require_numeric(std::isfinite(v), std::string(who) + ": nonfinite time");
    require(v > last, std::string(who) + (allow_zero
                                              ? ": times must be nonnegative and increasing"
                                              : ": times must be positive and increasing"));
    last = v;
  }
}

bool probe_constant(const RegimeSpec& r, double t_max, double& c, double& h) {
  c = r.velocity(0.0, 0.0);
  h = r.jump(0.0);
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; b <= 4; ++b) {
      const double tp = t_max * a / 4.0, t = t_max * b / 4.0;
      if (std::abs(r.velocity(tp, t) - c) > 1e-12 * (1.0 + std::abs(c))) return false;
    }
  for (int a = 0; a <= 8; ++a)
    if (std::abs(r.jump(t_max * a / 8.0) - h) > 1e-12 * (1.0 + std::abs(h))) return false;
  return true;
}

}  // namespace

// ---------------- parameter shorthands and limits ----------------

SymmetricHVParams symmetric_hv_params(double lambda0, double lambda1, double c0,
                                      double c1, double h0, double h1) {
  require(lambda0 > 0 && lambda1 > 0, "symmetric_hv_params: positive rates required");
  require(std::abs(lambda0 - lambda1) <= 1e-12 * lambda0,
          "symmetric_hv_params: equal switching rates required");
  require(h0 > -1.0 && h1 > -1.0, "symmetric_hv_params: jumps must exceed -1");
  SymmetricHVParams p;
  p.lambda = lambda0;
  p.c = 0.5 * (c0 - c1);
  p.B = 0.5 * (h0 + h1);
  p.b = 0.5 * (h0 - h1);
  p.gamma = {-2.0 * p.c * (p.c / p.lambda + h0), -2.0 * p.c * (p.c / p.lambda - h1)};
  return p;
}

HvLimits hv_limits(double c0, double c1, double h0, double h1, double lambda0,
                   double lambda1) {
  require(lambda0 > 0 && lambda1 > 0, "hv_limits: positive rates required");
  require(h0 > -1.0 && h1 > -1.0, "hv_limits: jumps must exceed -1");
  require(c0 > c1, "hv_limits: velocity ordering c0 > c1 required");
  HvLimits lim;
  lim.small_t_0 = std::sqrt(lambda0) * std::abs(h0);
  lim.small_t_1 = std::sqrt(lambda1) * std::abs(h1);
  const double lam = 0.5 * (lambda0 + lambda1);
  const double bm = 0.5 * (h0 + h1);
  const double ch = 0.5 * (c0 - c1);
  const double a0 = lambda0 * bm + ch, a1 = lambda1 * bm - ch;
  lim.large_t = std::sqrt(lambda0 * lambda1 / (2.0 * lam * lam * lam) * (a0 * a0 + a1 * a1));
  return lim;
}

// ---------------- curves ----------------

VolatilityCurve hv_symmetric(const SymmetricHVParams& p, const std::vector<double>& t_grid) {
  require(p.lambda > 0, "hv_symmetric: positive switching rate required");
  const double h0 = p.B + p.b, h1 = p.B - p.b;
  require(h0 > -1.0 && h1 > -1.0, "hv_symmetric: jumps must exceed -1");
  const double g0 = -2.0 * p.c * (p.c / p.lambda + h0);
  const double g1 = -2.0 * p.c * (p.c / p.lambda - h1);
  require(std::abs(p.gamma[0] - g0) <= 1e-10 * (1.0 + std::abs(g0)) &&
              std::abs(p.gamma[1] - g1) <= 1e-10 * (1.0 + std::abs(g1)),
          "hv_symmetric: gamma fields inconsistent with (lambda, c, B, b)");
  check_times(t_grid, true, "hv_symmetric");

  const double cb = p.c + p.lambda * p.b;
  const double base = p.c * p.c / p.lambda + p.lambda * p.B * p.B;

  VolatilityCurve out;
  out.t = t_grid;
  out.hv0.resize(t_grid.size());
  out.hv1.resize(t_grid.size());
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid[k];
    const double p2 = phi_over_t(2.0 * p.lambda, t) / p.lambda;
    const double p1 = phi_over_t(p.lambda, t);
    const double cross = 2.0 * p.B * cb * std::exp(-2.0 * p.lambda * t);
    const double v0 = base + cb * cb * p2 + p.gamma[0] * p1 + cross;
    const double v1 = base + cb * cb * p2 + p.gamma[1] * p1 - cross;
    require_numeric(std::isfinite(v0) && std::isfinite(v1) &&
                        std::min(v0, v1) > -1e-12 * (1.0 + base),
                    "hv_symmetric: variance rate went negative");
    out.hv0[k] = std::sqrt(std::max(v0, 0.0));
    out.hv1[k] = std::sqrt(std::max(v1, 0.0));
  }
  out.limits.small_t_0 = std::sqrt(p.lambda) * std::abs(h0);
  out.limits.small_t_1 = std::sqrt(p.lambda) * std::abs(h1);
  out.limits.large_t = std::sqrt(base);
  return out;
}

VolatilityCurve hv_curve(const ProcessModel& m, const std::vector<double>& t_grid,
                         SolveMethod method, std::size_t n_steps, Exec exec) {
  check_times(t_grid, false, "hv_curve");
  const double t_back = t_grid.back();

  VolatilityCurve out;
  out.t = t_grid;
  out.hv0.resize(t_grid.size());
  out.hv1.resize(t_grid.size());

  std::array<std::vector<double>, 2> sigma;
  if (method == SolveMethod::closed_form_exp) {
    const auto mc = moment_values(m, t_grid);
    sigma = mc.sigma;
  } else {
    const auto mc = moment_curves(m, t_back, n_steps, SolveMethod::grid,
                                  VarianceMode::exact, exec);
    const double dt = t_back / static_cast<double>(n_steps);
    for (int i = 0; i < 2; ++i) {
      sigma[i].resize(t_grid.size());
      for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const double pos = t_grid[k] / dt;
        const auto j = std::min(static_cast<std::size_t>(pos), n_steps - 1);
        const double w = pos - static_cast<double>(j);
        sigma[i][k] = (1.0 - w) * mc.sigma[i][j] + w * mc.sigma[i][j + 1];
      }
    }
  }

  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    require_numeric(std::isfinite(sigma[0][k]) && std::isfinite(sigma[1][k]),
                    "hv_curve: nonfinite variance");
    out.hv0[k] = std::sqrt(std::max(sigma[0][k], 0.0) / t_grid[k]);
    out.hv1[k] = std::sqrt(std::max(sigma[1][k], 0.0) / t_grid[k]);
  }

  // limit formulas apply only to the constant exponential model
  double c0, c1, h0, h1;
  if (m.switching.dist[0].exp_rate && m.switching.dist[1].exp_rate &&
      probe_constant(m.regimes[0], t_back, c0, h0) &&
      probe_constant(m.regimes[1], t_back, c1, h1)) {
    const double l0 = *m.switching.dist[0].exp_rate;
    const double l1 = *m.switching.dist[1].exp_rate;
    out.limits.small_t_0 = std::sqrt(l0) * std::abs(h0);
    out.limits.small_t_1 = std::sqrt(l1) * std::abs(h1);
    if (c0 > c1) out.limits.large_t = hv_limits(c0, c1, h0, h1, l0, l1).large_t;
  }
  return out;
}

VolatilityCurve hv_moving_average(double sigma, double lambda0, double lambda1,
                                  const std::vector<double>& t_grid) {
  require(sigma > 0, "hv_moving_average: positive sigma required");
  require(lambda1 > 0 && lambda0 + lambda1 > 0,
          "hv_moving_average: lambda1 and lambda0 + lambda1 must be positive");
  check_times(t_grid, true, "hv_moving_average");

  const double lam = 0.5 * (lambda0 + lambda1);
  const double scale = sigma / (lambda0 + lambda1);

  VolatilityCurve out;
  out.t = t_grid;
  out.hv0.resize(t_grid.size());
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double v =
        lambda1 * lambda1 + lambda0 * (2.0 * lambda1 + lambda0) * phi_over_t(lam, t_grid[k]);
    out.hv0[k] = scale * std::sqrt(std::max(v, 0.0));
  }
  out.hv1 = out.hv0;
  out.limits.small_t_0 = out.limits.small_t_1 = sigma;
  out.limits.large_t = sigma * lambda1 / (lambda0 + lambda1);
  return out;
}

}  // namespace tgm
