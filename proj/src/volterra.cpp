#include "tgm/volterra.hpp"

#include <cmath>
#include <limits>

#include "tgm/math.hpp"

namespace tgm {

double phi_lambda(double lambda, double t) {
  require(lambda > 0, "phi_lambda: rate must be positive");
  require(t >= 0, "phi_lambda: negative time");
  return -std::expm1(-2.0 * lambda * t) / (2.0 * lambda);
}

double MatrixExpLambda::entry(int i, int j, double t) const {
  require(i >= 0 && i < 2 && j >= 0 && j < 2, "MatrixExpLambda: bad index");
  const double phi = phi_lambda(0.5 * (lambda0 + lambda1), t);
  const double li = (i == 0) ? lambda0 : lambda1;
  return (i == j) ? 1.0 - phi * li : phi * li;
}

// ---------------- kernel measures ----------------

VolterraKernel sojourn_kernel(const SojournDistribution& d) {
  VolterraKernel k;
  k.survival = d.survival;
  k.truncation = d.support_truncation;
  return k;
}

VolterraKernel discounted_kernel(const SojournDistribution& d, double rate) {
  require(rate >= 0, "discounted_kernel: negative rate");
  VolterraKernel k;
  k.survival = d.survival;
  k.weight = [rate](double u) { return std::exp(-rate * u); };
  k.weight_derivative = [rate](double u) { return -rate * std::exp(-rate * u); };
  k.truncation = d.support_truncation;
  return k;
}

double kernel_panel_mass(const VolterraKernel& k, double a, double b) {
  require(b >= a && a >= 0, "kernel_panel_mass: bad panel");
  if (!k.weight) return k.survival(a) - k.survival(b);
  const double boundary = k.weight(a) * k.survival(a) - k.weight(b) * k.survival(b);
  return boundary + integrate_gl([&](double u) { return k.weight_derivative(u) * k.survival(u); },
                                 a, b, 8);
}

double kernel_panel_first_moment(const VolterraKernel& k, double a, double b) {
  require(b >= a && a >= 0, "kernel_panel_first_moment: bad panel");
  // written as a * mass + offset moment; the offset form avoids cancellation
  const double offset =
      k.weight
          ? -(b - a) * k.weight(b) * k.survival(b) +
                integrate_gl(
                    [&](double u) {
                      return (k.weight(u) + (u - a) * k.weight_derivative(u)) * k.survival(u);
                    },
                    a, b, 8)
          : -(b - a) * k.survival(b) +
                integrate_gl([&](double u) { return k.survival(u); }, a, b, 8);
  return a * kernel_panel_mass(k, a, b) + offset;
}

ProductWeights product_weights(const VolterraKernel& k, double dt, std::size_t n_panels) {
  return product_weights_from(k, 0.0, dt, n_panels);
}

ProductWeights product_weights_from(const VolterraKernel& k, double start, double dt,
                                    std::size_t n_panels) {
  require(dt > 0 && start >= 0, "product_weights: bad step or start");
  ProductWeights pw;
  pw.dt = dt;
  std::size_t n = n_panels;
  if (k.truncation > 0 && k.truncation > start) {
    const auto cap = static_cast<std::size_t>(std::ceil((k.truncation - start) / dt)) + 2;
    n = std::min(n, cap);
  }
  pw.w0.resize(n);
  pw.w1.resize(n);
  const auto& gl = gauss_legendre(8);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = start + dt * static_cast<double>(j);
    const double b = a + dt;
    // a flat survival carries no probability across the panel; skip it so
    // quadrature roundoff cannot manufacture spurious weights
    if (k.survival(a) == k.survival(b)) {
      pw.w0[j] = 0.0;
      pw.w1[j] = 0.0;
      continue;
    }
    const double mass = kernel_panel_mass(k, a, b);
    // offset moment int (u-a) w f du, same integration-by-parts form as above
    double offset;
    if (k.weight) {
      double acc = 0;
      for (std::size_t q = 0; q < gl.x.size(); ++q) {
        const double u = 0.5 * (a + b) + 0.5 * dt * gl.x[q];
        acc += gl.w[q] * (k.weight(u) + (u - a) * k.weight_derivative(u)) * k.survival(u);
      }
      offset = -dt * k.weight(b) * k.survival(b) + 0.5 * dt * acc;
    } else {
      double acc = 0;
      for (std::size_t q = 0; q < gl.x.size(); ++q) {
        const double u = 0.5 * (a + b) + 0.5 * dt * gl.x[q];
        acc += gl.w[q] * k.survival(u);
      }
      offset = -dt * k.survival(b) + 0.5 * dt * acc;
    }
    pw.w1[j] = offset / dt;
    pw.w0[j] = mass - pw.w1[j];
  }
  return pw;
}

// ---------------- coupled pair solver ----------------

PairSolution solve_volterra_pair(const std::array<VolterraKernel, 2>& kernel,
                                 const std::array<std::vector<double>, 2>& forcing,
                                 double t_max) {
  require(t_max > 0, "solve_volterra_pair: bad horizon");
  require(forcing[0].size() == forcing[1].size() && forcing[0].size() >= 2,
          "solve_volterra_pair: forcing grids must match and hold at least two points");
  const std::size_t n = forcing[0].size() - 1;
  const double dt = t_max / static_cast<double>(n);

  const std::array<ProductWeights, 2> pw = {product_weights(kernel[0], dt, n),
                                            product_weights(kernel[1], dt, n)};

  PairSolution sol;
  sol.t = uniform_grid(0.0, t_max, n + 1);
  sol.g[0].assign(n + 1, 0.0);
  sol.g[1].assign(n + 1, 0.0);
  sol.g[0][0] = forcing[0][0];
  sol.g[1][0] = forcing[1][0];

  for (std::size_t m = 1; m <= n; ++m) {
    double s[2];
    for (int i = 0; i < 2; ++i) {
      const auto& w = pw[i];
      const auto& other = sol.g[1 - i];
      const std::size_t kmax = std::min(m, w.w0.size());
      double acc = forcing[i][m];
      for (std::size_t k2 = 0; k2 < kmax; ++k2)
        acc += w.w1[k2] * other[m - k2 - 1];
      for (std::size_t k2 = 1; k2 < kmax; ++k2)
        acc += w.w0[k2] * other[m - k2];
      s[i] = acc;
    }
    // the k = 0 panel couples the two current unknowns linearly
    const double a0 = pw[0].w0.empty() ? 0.0 : pw[0].w0[0];
    const double a1 = pw[1].w0.empty() ? 0.0 : pw[1].w0[0];
    const double det = 1.0 - a0 * a1;
    require_numeric(det > 0.5, "solve_volterra_pair: first-panel masses too large; refine dt");
    sol.g[0][m] = (s[0] + a0 * s[1]) / det;
    sol.g[1][m] = s[1] + a1 * sol.g[0][m];
  }
  return sol;
}

PairSolution solve_volterra_pair(const VolterraPairProblem& p) {
  require(p.n_steps >= 1, "solve_volterra_pair: need at least one step");
  std::array<std::vector<double>, 2> forcing;
  const auto grid = uniform_grid(0.0, p.t_max, p.n_steps + 1);
  for (int i = 0; i < 2; ++i) {
    forcing[i].resize(grid.size());
    for (std::size_t m = 0; m < grid.size(); ++m) forcing[i][m] = p.forcing[i](grid[m]);
  }
  return solve_volterra_pair(p.kernel, forcing, p.t_max);
}

// ---------------- exponential-kernel closed form ----------------

std::array<std::vector<double>, 2> exp_kernel_solution(
    double lambda0, double lambda1, const std::function<double(double)>& b0,
    const std::function<double(double)>& b1, const std::vector<double>& times) {
  require(lambda0 > 0 && lambda1 > 0, "exp_kernel_solution: rates must be positive");
  require(!times.empty() && times.front() >= 0, "exp_kernel_solution: bad time grid");
  const double two_lambda = lambda0 + lambda1;
  const auto& gl = gauss_legendre(8);

  // running P(t) = int_0^t v,  R(t) = int_0^t e^{-2 lambda (t-u)} v(u) du,
  // with v = L b; then g = b + P + Lambda (P - R) / (2 lambda)
  double P[2] = {0.0, 0.0}, R[2] = {0.0, 0.0};
  double prev = 0.0;

  std::array<std::vector<double>, 2> g;
  g[0].resize(times.size());
  g[1].resize(times.size());

  for (std::size_t m = 0; m < times.size(); ++m) {
    const double t = times[m];
    require(t >= prev, "exp_kernel_solution: times must be nondecreasing");
    const double span = t - prev;
    if (span > 0) {
      // sub-panels keep both the exponential factor and b well resolved
      const auto nsub = static_cast<std::size_t>(
          std::ceil(span * std::max(2.0 * two_lambda, 16.0)));
      const double w = span / static_cast<double>(nsub);
      for (std::size_t j2 = 0; j2 < nsub; ++j2) {
        const double a = prev + w * static_cast<double>(j2);
        const double c = a + w;
        double dp[2] = {0.0, 0.0}, dr[2] = {0.0, 0.0};
        for (std::size_t q = 0; q < gl.x.size(); ++q) {
          const double u = 0.5 * (a + c) + 0.5 * w * gl.x[q];
          const double v0 = lambda0 * b1(u);
          const double v1 = lambda1 * b0(u);
          const double gw = 0.5 * w * gl.w[q];
          const double decay = std::exp(-two_lambda * (c - u));
          dp[0] += gw * v0;
          dp[1] += gw * v1;
          dr[0] += gw * decay * v0;
          dr[1] += gw * decay * v1;
        }
        const double fade = std::exp(-two_lambda * w);
        for (int i = 0; i < 2; ++i) {
          P[i] += dp[i];
          R[i] = R[i] * fade + dr[i];
        }
      }
      prev = t;
    }
    const double y0 = P[0] - R[0], y1 = P[1] - R[1];
    g[0][m] = b0(t) + P[0] + lambda0 * (y1 - y0) / two_lambda;
    g[1][m] = b1(t) + P[1] + lambda1 * (y0 - y1) / two_lambda;
  }
  return g;
}

}  // namespace tgm
