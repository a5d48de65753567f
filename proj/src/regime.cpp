#include "tgm/regime.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "tgm/math.hpp"

namespace tgm {

RegimeSpec constant_regime(double c, double h) {
  RegimeSpec r;
  r.velocity = [c](double, double) { return c; };
  r.jump = [h](double) { return h; };
  r.antiderivative = [c](double, double t) { return c * t; };
  r.velocity_depends_on_prev = false;
  r.label = "constant(c=" + std::to_string(c) + ",h=" + std::to_string(h) + ")";
  return r;
}

RegimeSpec hyperbolic_regime(double a, double b) {
  require(a > 0, "hyperbolic_regime: a must be positive");
  RegimeSpec r;
  r.velocity = [a](double, double t) { return a / (1.0 + a * t); };
  r.jump = [a, b](double T) { return b / (1.0 + a * T); };
  r.antiderivative = [a](double, double t) { return std::log1p(a * t); };
  r.velocity_depends_on_prev = false;
  r.label = "hyperbolic(a=" + std::to_string(a) + ",b=" + std::to_string(b) + ")";
  return r;
}

RegimeSpec linear_regime(double cs, double hs) {
  RegimeSpec r;
  r.velocity = [cs](double, double t) { return cs * t; };
  r.jump = [hs](double T) { return hs * T; };
  r.antiderivative = [cs](double, double t) { return 0.5 * cs * t * t; };
  r.velocity_depends_on_prev = false;
  r.label = "linear(cs=" + std::to_string(cs) + ",hs=" + std::to_string(hs) + ")";
  return r;
}

namespace {

double lin_interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto j = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double u = (x - xs[j]) / (xs[j + 1] - xs[j]);
  return ys[j] * (1 - u) + ys[j + 1] * u;
}

struct VelocityTable {
  std::vector<double> prev_grid, t_grid;
  std::vector<std::vector<double>> v;  // v[i][j] at (prev_grid[i], t_grid[j])

  double at(double T, double t) const {
    T = std::clamp(T, prev_grid.front(), prev_grid.back());
    t = std::clamp(t, t_grid.front(), t_grid.back());
    auto iti = std::upper_bound(prev_grid.begin(), prev_grid.end(), T);
    auto i = std::min(static_cast<std::size_t>(
                          std::max<std::ptrdiff_t>(iti - prev_grid.begin() - 1, 0)),
                      prev_grid.size() - 2);
    auto itj = std::upper_bound(t_grid.begin(), t_grid.end(), t);
    auto j = std::min(static_cast<std::size_t>(
                          std::max<std::ptrdiff_t>(itj - t_grid.begin() - 1, 0)),
                      t_grid.size() - 2);
    const double a = (T - prev_grid[i]) / (prev_grid[i + 1] - prev_grid[i]);
    const double b = (t - t_grid[j]) / (t_grid[j + 1] - t_grid[j]);
    return v[i][j] * (1 - a) * (1 - b) + v[i + 1][j] * a * (1 - b) +
           v[i][j + 1] * (1 - a) * b + v[i + 1][j + 1] * a * b;
  }
};

}  // namespace

RegimeSpec table_regime(std::vector<double> prev_grid, std::vector<double> t_grid,
                        std::vector<std::vector<double>> velocity,
                        std::vector<double> jump_grid, std::vector<double> jump_values) {
  require(prev_grid.size() >= 2 && t_grid.size() >= 2, "table_regime: grids too small");
  require(velocity.size() == prev_grid.size(), "table_regime: velocity rows mismatch");
  for (const auto& row : velocity)
    require(row.size() == t_grid.size(), "table_regime: velocity cols mismatch");
  require(std::is_sorted(prev_grid.begin(), prev_grid.end()) &&
              std::is_sorted(t_grid.begin(), t_grid.end()),
          "table_regime: grids must be sorted");
  require(jump_grid.size() == jump_values.size() && jump_grid.size() >= 2,
          "table_regime: bad jump table");

  auto tab = std::make_shared<VelocityTable>();
  tab->prev_grid = std::move(prev_grid);
  tab->t_grid = std::move(t_grid);
  tab->v = std::move(velocity);
  auto jg = std::make_shared<std::vector<double>>(std::move(jump_grid));
  auto jv = std::make_shared<std::vector<double>>(std::move(jump_values));

  bool depends_on_prev = false;
  for (std::size_t j = 0; j < tab->t_grid.size() && !depends_on_prev; ++j)
    for (std::size_t i = 1; i < tab->prev_grid.size(); ++i)
      if (tab->v[i][j] != tab->v[0][j]) {
        depends_on_prev = true;
        break;
      }

  RegimeSpec r;
  r.velocity = [tab](double T, double t) { return tab->at(T, t); };
  r.jump = [jg, jv](double T) { return lin_interp(*jg, *jv, T); };
  r.velocity_depends_on_prev = depends_on_prev;
  r.label = "table";
  return r;
}

double segment_displacement(const RegimeSpec& regime, double prev_sojourn, double s,
                            double t, double origin) {
  require(s >= origin && t >= s, "segment_displacement: need origin <= s <= t");
  if (t == s) return 0.0;
  if (regime.has_antiderivative())
    return regime.antiderivative(prev_sojourn, t - origin) -
           regime.antiderivative(prev_sojourn, s - origin);
  const auto f = [&](double u) { return regime.velocity(prev_sojourn, u - origin); };
  return integrate_adaptive(f, s, t, 1e-10);
}

}  // namespace tgm
