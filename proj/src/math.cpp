#include "tgm/math.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "tgm/common.hpp"

namespace tgm {

// ---------------- Gauss-Legendre ----------------

namespace {

GaussLegendre compute_gl(int n) {
  GaussLegendre gl;
  gl.x.resize(n);
  gl.w.resize(n);
  // Newton iteration on P_n, cosine initial guesses
  for (int k = 0; k < (n + 1) / 2; ++k) {
    double x = std::cos(M_PI * (k + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    gl.x[k] = -x;
    gl.x[n - 1 - k] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.w[k] = w;
    gl.w[n - 1 - k] = w;
  }
  if (n % 2 == 1) gl.x[n / 2] = 0.0;
  return gl;
}

}  // namespace

const GaussLegendre& gauss_legendre(int n) {
  require(n >= 1 && n <= 4096, "gauss_legendre: order out of range");
  static std::map<int, GaussLegendre> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gl(n)).first;
  return it->second;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b, int n) {
  const GaussLegendre& gl = gauss_legendre(n);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0;
  for (int i = 0; i < n; ++i) s += gl.w[i] * f(c + h * gl.x[i]);
  return s * h;
}

double integrate_panels(const std::function<double(double)>& f, double a, double b,
                        double max_panel, int nodes_per_panel) {
  if (b <= a) return 0.0;
  require(max_panel > 0, "integrate_panels: max_panel must be positive");
  const auto n_panels = static_cast<std::size_t>(std::ceil((b - a) / max_panel));
  const double h = (b - a) / static_cast<double>(n_panels);
  double s = 0;
  for (std::size_t k = 0; k < n_panels; ++k) {
    const double lo = a + h * static_cast<double>(k);
    s += integrate_gl(f, lo, std::min(lo + h, b), nodes_per_panel);
  }
  return s;
}

namespace {

double adaptive_rec(const std::function<double(double)>& f, double a, double b,
                    double tol, int depth, double& achieved) {
  const double coarse = integrate_gl(f, a, b, 7);
  const double fine = integrate_gl(f, a, b, 15);
  const double err = std::abs(fine - coarse);
  if (err <= tol || depth >= 48) {
    achieved += err;
    return fine;
  }
  const double mid = 0.5 * (a + b);
  return adaptive_rec(f, a, mid, 0.5 * tol, depth + 1, achieved) +
         adaptive_rec(f, mid, b, 0.5 * tol, depth + 1, achieved);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol) {
  if (b == a) return 0.0;
  const double sign = b > a ? 1.0 : -1.0;
  if (b < a) std::swap(a, b);
  double achieved = 0;
  const double v = adaptive_rec(f, a, b, abs_tol, 0, achieved);
  require_numeric(achieved <= 10 * abs_tol,
                  "integrate_adaptive: tolerance not reached, achieved estimate " +
                      std::to_string(achieved));
  return sign * v;
}

// ---------------- grids ----------------

std::vector<double> uniform_grid(double t0, double t1, std::size_t n_points) {
  require(n_points >= 2 && t1 > t0, "uniform_grid: bad arguments");
  std::vector<double> g(n_points);
  const double dt = (t1 - t0) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) g[i] = t0 + dt * static_cast<double>(i);
  g.back() = t1;
  return g;
}

std::vector<double> log_grid(double t0, double t1, std::size_t n_points) {
  require(n_points >= 2 && t1 > t0 && t0 > 0, "log_grid: bad arguments");
  std::vector<double> g(n_points);
  const double l0 = std::log(t0), dl = (std::log(t1) - l0) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) g[i] = std::exp(l0 + dl * static_cast<double>(i));
  g.front() = t0;
  g.back() = t1;
  return g;
}

bool is_uniform(const std::vector<double>& g, double rel_tol) {
  if (g.size() < 2) return false;
  const double dt = (g.back() - g.front()) / static_cast<double>(g.size() - 1);
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (std::abs(g[i] - g[i - 1] - dt) > rel_tol * std::max(1.0, std::abs(dt))) return false;
  }
  return true;
}

// ---------------- CumulativeCurve ----------------

CumulativeCurve::CumulativeCurve(std::function<double(double)> f, std::vector<double> grid,
                                 int panel_nodes)
    : f_(std::move(f)), grid_(std::move(grid)) {
  require(grid_.size() >= 2, "CumulativeCurve: need at least two grid points");
  require(std::is_sorted(grid_.begin(), grid_.end()), "CumulativeCurve: grid not sorted");
  cum_.resize(grid_.size());
  cum_[0] = 0;
  for (std::size_t i = 1; i < grid_.size(); ++i)
    cum_[i] = cum_[i - 1] + integrate_gl(f_, grid_[i - 1], grid_[i], panel_nodes);
}

double CumulativeCurve::operator()(double t) const {
  require(!grid_.empty(), "CumulativeCurve: empty");
  if (t <= grid_.front()) return 0.0;
  if (t >= grid_.back()) return cum_.back();
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  const auto j = static_cast<std::size_t>(it - grid_.begin()) - 1;
  if (t == grid_[j]) return cum_[j];
  return cum_[j] + integrate_gl(f_, grid_[j], t, 5);
}

// ---------------- UniformCubic ----------------

UniformCubic::UniformCubic(double t0, double dt, std::vector<double> y)
    : t0_(t0), dt_(dt), y_(std::move(y)) {
  require(dt_ > 0 && y_.size() >= 2, "UniformCubic: bad arguments");
}

double UniformCubic::operator()(double t) const {
  const auto n = y_.size();
  double s = (t - t0_) / dt_;
  if (n == 2 || n == 3) {  // degrade to linear
    s = std::clamp(s, 0.0, static_cast<double>(n - 1));
    auto j = std::min(static_cast<std::size_t>(s), n - 2);
    const double u = s - static_cast<double>(j);
    return y_[j] * (1 - u) + y_[j + 1] * u;
  }
  s = std::clamp(s, 0.0, static_cast<double>(n - 1));
  auto j = static_cast<std::ptrdiff_t>(s);
  // centered 4-point stencil, clamped at the boundaries
  auto i0 = std::clamp<std::ptrdiff_t>(j - 1, 0, static_cast<std::ptrdiff_t>(n) - 4);
  const double u = s - static_cast<double>(i0);  // in [0,3]
  const double y0 = y_[i0], y1 = y_[i0 + 1], y2 = y_[i0 + 2], y3 = y_[i0 + 3];
  // Lagrange basis on nodes 0,1,2,3
  const double a = (u - 1) * (u - 2) * (u - 3) / -6.0;
  const double b = u * (u - 2) * (u - 3) / 2.0;
  const double c = u * (u - 1) * (u - 3) / -2.0;
  const double d = u * (u - 1) * (u - 2) / 6.0;
  return a * y0 + b * y1 + c * y2 + d * y3;
}

// ---------------- MonotoneCubic ----------------

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  require(x_.size() == y_.size() && x_.size() >= 2, "MonotoneCubic: bad sizes");
  for (std::size_t i = 1; i < x_.size(); ++i)
    require(x_[i] > x_[i - 1], "MonotoneCubic: grid not strictly increasing");
  const std::size_t n = x_.size();
  std::vector<double> d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
  m_.resize(n);
  m_[0] = d[0];
  m_[n - 1] = d[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i)
    m_[i] = (d[i - 1] * d[i] <= 0) ? 0.0 : 0.5 * (d[i - 1] + d[i]);
  // Fritsch-Carlson limiter
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (d[i] == 0.0) {
      m_[i] = m_[i + 1] = 0.0;
      continue;
    }
    const double a = m_[i] / d[i], b = m_[i + 1] / d[i];
    const double s2 = a * a + b * b;
    if (s2 > 9.0) {
      const double tau = 3.0 / std::sqrt(s2);
      m_[i] = tau * a * d[i];
      m_[i + 1] = tau * b * d[i];
    }
  }
}

std::size_t MonotoneCubic::locate(double t) const {
  if (t <= x_.front()) return 0;
  if (t >= x_[x_.size() - 2]) return x_.size() - 2;
  auto it = std::upper_bound(x_.begin(), x_.end(), t);
  return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double MonotoneCubic::operator()(double t) const {
  const std::size_t j = locate(t);
  const double h = x_[j + 1] - x_[j];
  const double u = (t - x_[j]) / h;
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
  const double h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u);
  const double h11 = u * u * (u - 1);
  return h00 * y_[j] + h10 * h * m_[j] + h01 * y_[j + 1] + h11 * h * m_[j + 1];
}

double MonotoneCubic::derivative(double t) const {
  const std::size_t j = locate(t);
  const double h = x_[j + 1] - x_[j];
  const double u = (t - x_[j]) / h;
  const double dh00 = 6 * u * (u - 1);
  const double dh10 = (1 - u) * (1 - 3 * u);
  const double dh01 = -dh00;
  const double dh11 = u * (3 * u - 2);
  return (dh00 * y_[j] + dh01 * y_[j + 1]) / h + dh10 * m_[j] + dh11 * m_[j + 1];
}

}  // namespace tgm
