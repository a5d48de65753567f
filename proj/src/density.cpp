#include "tgm/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "tgm/common.hpp"
#include "tgm/math.hpp"
#include "tgm/volterra.hpp"

namespace tgm {
namespace {

// ---------------- deposition onto the x grid ----------------

// Mass deposited onto the piecewise-linear nodal basis of a uniform grid.
// point() is the usual two-node split; segment() spreads mass uniformly over
// an interval cell by cell, each piece split at its centroid, which equals the
// exact hat-function projection of the uniform density.  Trapezoid integrals
// of the nodal values reproduce deposited mass exactly for interior support.
struct Deposit {
  double x0 = 0, dx = 1;
  std::vector<double>* val = nullptr;
  double lost = 0;

  void point(double pos, double m) {
    const double r = (pos - x0) / dx;
    if (r < 0.0 || r > static_cast<double>(val->size() - 1)) {
      lost += m;
      return;
    }
    std::size_t idx = static_cast<std::size_t>(r);
    if (idx >= val->size() - 1) idx = val->size() - 2;
    const double frac = r - static_cast<double>(idx);
    (*val)[idx] += m * (1.0 - frac) / dx;
    (*val)[idx + 1] += m * frac / dx;
  }

  void segment(double lo, double hi, double m) {
    if (hi < lo) std::swap(lo, hi);
    const double width = hi - lo;
    if (width < 1e-12 * dx) {
      point(0.5 * (lo + hi), m);
      return;
    }
    const double rho = m / width;
    double a = lo;
    while (a < hi) {
      const double cell = std::floor((a - x0) / dx);
      const double cell_hi = x0 + (cell + 1.0) * dx;
      const double b = std::min(hi, cell_hi <= a ? a + dx : cell_hi);
      point(0.5 * (a + b), rho * (b - a));
      a = b;
    }
  }
};

// linear sample of a nodal slice; zero outside the grid
inline double sample_pl(const std::vector<double>& v, double x0, double inv_dx, double y) {
  const double r = (y - x0) * inv_dx;
  if (r < 0.0 || r >= static_cast<double>(v.size() - 1))
    return (r == static_cast<double>(v.size() - 1)) ? v.back() : 0.0;
  const std::size_t idx = static_cast<std::size_t>(r);
  const double frac = r - static_cast<double>(idx);
  return v[idx] + frac * (v[idx + 1] - v[idx]);
}

// ---------------- single-switch ridge ----------------

// Push-forward of the tail atom through the first switch: mass density
// f_i(u) Fbar_{1-i}(t - u) du deposited at gamma(u) = l_i(u) + h_i(u) +
// l_{1-i}(t - u) for u in [u_lo, t].  Panels are refined until the image
// moves by at most half a cell; panel masses come from survival differences,
// so hazard blow-ups at u = 0 cost nothing.
void deposit_ridge(Deposit& dep, const ProcessModel& m, const RegimeCurves& curves, int i,
                   double u_lo, double t, double dt, double scale) {
  const auto& di = m.switching.dist[i];
  const auto& dj = m.switching.dist[1 - i];
  const auto& li = curves.mean_displacement[i];
  const auto& lj = curves.mean_displacement[1 - i];
  const auto& hi = m.regimes[i].jump;
  auto gamma = [&](double u) { return li(u) + hi(u) + lj(t - u); };

  // no truncation shortcut: panels in a dead tail are skipped for free by the
  // survival-equality test, and a conditional rescale by 1 / Fbar(s) can make
  // the absolute tail relatively significant
  const double u_hi = t;
  const std::size_t n_pan =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((u_hi - u_lo) / dt)));
  const double pan = (u_hi - u_lo) / static_cast<double>(n_pan);
  for (std::size_t p = 0; p < n_pan; ++p) {
    const double a = u_lo + pan * static_cast<double>(p);
    const double b = (p + 1 == n_pan) ? u_hi : a + pan;
    if (di.survival(a) == di.survival(b)) continue;
    const double ga = gamma(a), gb = gamma(b), gm = gamma(0.5 * (a + b));
    const double span = std::abs(gb - ga) + 4.0 * std::abs(gm - 0.5 * (ga + gb));
    const std::size_t n_sub = std::min<std::size_t>(
        256, std::max<std::size_t>(
                 1, static_cast<std::size_t>(std::ceil(span / (0.45 * dep.dx)))));
    double sa = a, fa = di.survival(a), pa = ga;
    for (std::size_t q = 0; q < n_sub; ++q) {
      const double sb = (q + 1 == n_sub) ? b : a + (b - a) * static_cast<double>(q + 1) /
                                                      static_cast<double>(n_sub);
      const double fb = di.survival(sb);
      const double pb = gamma(sb);
      const double mass = (fa - fb) * dj.survival(t - 0.5 * (sa + sb)) * scale;
      if (mass != 0.0) dep.segment(pa, pb, mass);
      sa = sb;
      fa = fb;
      pa = pb;
    }
  }
}

}  // namespace

double DensitySurface::slice_mass(int state, std::size_t k) const {
  const auto& v = density[state][k];
  double sum = 0;
  for (double d : v) sum += d;
  sum -= 0.5 * (v.front() + v.back());
  return atom[state][k].mass + sum * (x[1] - x[0]);
}

DensitySurface density_surface(const ProcessModel& m, double t_max, std::size_t n_steps,
                               std::vector<double> x_grid, double observation_start,
                               Exec exec) {
  const double s = observation_start;
  require(!m.regimes[0].velocity_depends_on_prev && !m.regimes[1].velocity_depends_on_prev,
          "density_surface: velocities depending on the previous sojourn are not "
          "supported; use mc_density");
  require(x_grid.size() >= 8, "density_surface: x grid needs at least 8 nodes");
  require(is_uniform(x_grid), "density_surface: x grid must be uniform ascending");
  require(s >= 0 && t_max > s, "density_surface: need 0 <= start < t_max");
  require(n_steps >= 2, "density_surface: need at least 2 steps");

  const std::size_t nx = x_grid.size();
  const double x0 = x_grid.front();
  const double dx = x_grid[1] - x_grid[0];
  const double inv_dx = 1.0 / dx;
  const double dt = (t_max - s) / static_cast<double>(n_steps);

  const RegimeCurves curves = build_regime_curves(m, t_max);
  const std::array<VolterraKernel, 2> kern = {sojourn_kernel(m.switching.dist[0]),
                                              sojourn_kernel(m.switching.dist[1])};
  const std::array<ProductWeights, 2> pw = {product_weights(kern[0], dt, n_steps),
                                            product_weights(kern[1], dt, n_steps)};

  // displacement-plus-jump shift of the tail argument at the panel nodes
  std::array<std::vector<double>, 2> gt;
  for (int i = 0; i < 2; ++i) {
    gt[i].resize(n_steps + 1);
    for (std::size_t j = 0; j <= n_steps; ++j) {
      const double u = dt * static_cast<double>(j);
      gt[i][j] = curves.mean_displacement[i](u) + m.regimes[i].jump(u);
    }
  }

  // unconditional continuous slices q[i][k] at horizon k dt
  std::array<std::vector<std::vector<double>>, 2> q;
  for (int i = 0; i < 2; ++i) {
    q[i].assign(n_steps + 1, std::vector<double>(nx, 0.0));
  }

  std::array<std::vector<double>, 2> fixed, cand;
  for (int i = 0; i < 2; ++i) {
    fixed[i].assign(nx, 0.0);
    cand[i].assign(nx, 0.0);
  }

  for (std::size_t k = 1; k <= n_steps; ++k) {
    const double tk = dt * static_cast<double>(k);
    for (int i = 0; i < 2; ++i) {
      std::fill(fixed[i].begin(), fixed[i].end(), 0.0);
      Deposit dep{x0, dx, &fixed[i], 0.0};
      deposit_ridge(dep, m, curves, i, 0.0, tk, dt, 1.0);

      const auto& w0 = pw[i].w0;
      const auto& w1 = pw[i].w1;
      const std::size_t jmax = std::min(k, w0.size());
      const auto& other = q[1 - i];
      parallel_for(nx, exec, [&](std::size_t ix) {
        const double xm = x_grid[ix];
        double acc = fixed[i][ix];
        for (std::size_t j = 0; j < jmax; ++j) {
          if (j > 0 && w0[j] != 0.0)
            acc += w0[j] * sample_pl(other[k - j], x0, inv_dx, xm - gt[i][j]);
          if (w1[j] != 0.0 && k - j - 1 > 0)
            acc += w1[j] * sample_pl(other[k - j - 1], x0, inv_dx, xm - gt[i][j + 1]);
        }
        fixed[i][ix] = acc;
      });
    }

    // corner term: the j = 0 left endpoint touches the slice being built.
    // Predict it by linear extrapolation, then correct once.
    for (int i = 0; i < 2; ++i) {
      const double c = pw[i].w0.empty() ? 0.0 : pw[i].w0[0];
      const auto& qo = q[1 - i];
      parallel_for(nx, exec, [&](std::size_t ix) {
        double guess = 0.0;
        if (c != 0.0) {
          const double y = x_grid[ix] - gt[i][0];
          const double prev = sample_pl(qo[k - 1], x0, inv_dx, y);
          const double prev2 = (k >= 2) ? sample_pl(qo[k - 2], x0, inv_dx, y) : 0.0;
          guess = (k >= 2) ? 2.0 * prev - prev2 : prev;
        }
        cand[i][ix] = fixed[i][ix] + c * guess;
      });
    }
    for (int i = 0; i < 2; ++i) {
      const double c = pw[i].w0.empty() ? 0.0 : pw[i].w0[0];
      auto& out = q[i][k];
      parallel_for(nx, exec, [&](std::size_t ix) {
        const double corr =
            (c != 0.0) ? c * sample_pl(cand[1 - i], x0, inv_dx, x_grid[ix] - gt[i][0])
                       : 0.0;
        out[ix] = fixed[i][ix] + corr;
      });
    }
  }

  DensitySurface surf;
  surf.x = std::move(x_grid);
  surf.observation_start = s;
  surf.t.resize(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) surf.t[k] = s + dt * static_cast<double>(k);

  if (s == 0.0) {
    for (int i = 0; i < 2; ++i) {
      surf.density[i] = std::move(q[i]);
      surf.atom[i].resize(n_steps + 1);
      for (std::size_t k = 0; k <= n_steps; ++k) {
        surf.atom[i][k] = {curves.mean_displacement[i](surf.t[k]),
                           m.switching.dist[i].survival(surf.t[k])};
      }
    }
    return surf;
  }

  // observation started at s with no switch yet: reweight the first sojourn
  // by f_i(u) / Fbar_i(s) on u >= s and push through the unconditional slices
  for (int i = 0; i < 2; ++i) {
    const double fs = m.switching.dist[i].survival(s);
    require_numeric(fs > 1e-300, "density_surface: survival underflow at the start time");
    auto ow = product_weights_from(kern[i], s, dt, n_steps);
    for (auto& w : ow.w0) w /= fs;
    for (auto& w : ow.w1) w /= fs;
    std::vector<double> gts(n_steps + 1);
    for (std::size_t j = 0; j <= n_steps; ++j) {
      const double u = s + dt * static_cast<double>(j);
      gts[j] = curves.mean_displacement[i](u) + m.regimes[i].jump(u);
    }

    surf.density[i].assign(n_steps + 1, std::vector<double>(nx, 0.0));
    surf.atom[i].resize(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) {
      const double tk = surf.t[k];
      surf.atom[i][k] = {curves.mean_displacement[i](tk),
                         m.switching.dist[i].conditional_survival(s, tk)};
      if (k == 0) continue;
      auto& out = surf.density[i][k];
      Deposit dep{x0, dx, &out, 0.0};
      deposit_ridge(dep, m, curves, i, s, tk, dt, 1.0 / fs);
      const auto& other = q[1 - i];
      const std::size_t jmax = std::min(k, ow.w0.size());
      parallel_for(nx, exec, [&](std::size_t ix) {
        const double xm = surf.x[ix];
        double acc = out[ix];
        for (std::size_t j = 0; j < jmax; ++j) {
          if (ow.w0[j] != 0.0 && k - j > 0)
            acc += ow.w0[j] * sample_pl(other[k - j], x0, inv_dx, xm - gts[j]);
          if (ow.w1[j] != 0.0 && k - j - 1 > 0)
            acc += ow.w1[j] * sample_pl(other[k - j - 1], x0, inv_dx, xm - gts[j + 1]);
        }
        out[ix] = acc;
      });
    }
  }
  return surf;
}

McDensity mc_density(const ProcessModel& m, double t, std::vector<double> edges,
                     std::size_t n_paths, std::uint64_t seed, Exec exec) {
  require(t > 0, "mc_density: need t > 0");
  require(edges.size() >= 2, "mc_density: need at least 2 bin edges");
  require(std::is_sorted(edges.begin(), edges.end()), "mc_density: edges must ascend");
  require(n_paths >= 1, "mc_density: need at least one path");

  // slot per path: bin index, -1 no switch, -2 off range
  std::vector<std::int64_t> slot(n_paths);
  parallel_for(n_paths, exec, [&](std::size_t r) {
    const auto flow = generate_flow(m.switching, t, seed, r);
    if (flow.switch_times.empty()) {
      slot[r] = -1;
      return;
    }
    const double x = path_values(flow, m.regimes, {t})[0];
    if (x < edges.front() || x > edges.back()) {
      slot[r] = -2;
      return;
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    std::size_t b = static_cast<std::size_t>(it - edges.begin());
    b = (b == 0) ? 0 : b - 1;
    if (b >= edges.size() - 1) b = edges.size() - 2;
    slot[r] = static_cast<std::int64_t>(b);
  });

  McDensity out;
  out.t = t;
  out.edges = std::move(edges);
  out.count.assign(out.edges.size() - 1, 0);
  out.n_paths = n_paths;
  for (std::size_t r = 0; r < n_paths; ++r) {
    if (slot[r] == -1)
      ++out.no_switch;
    else if (slot[r] == -2)
      ++out.off_range;
    else
      ++out.count[static_cast<std::size_t>(slot[r])];
  }
  return out;
}

}  // namespace tgm
