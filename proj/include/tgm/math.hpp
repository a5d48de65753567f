#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace tgm {

// ---------------- Gauss-Legendre quadrature ----------------

struct GaussLegendre {
  std::vector<double> x;  // nodes on [-1,1]
  std::vector<double> w;
};

// nodes/weights for an n-point rule, cached per n
const GaussLegendre& gauss_legendre(int n);

double integrate_gl(const std::function<double(double)>& f, double a, double b, int n);

// composite rule with panels no wider than max_panel
double integrate_panels(const std::function<double(double)>& f, double a, double b,
                        double max_panel, int nodes_per_panel = 8);

// adaptive bisection, GL7 vs GL15 error estimate; throws with the achieved
// estimate if abs_tol is unreachable at max depth
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol);

// ---------------- grids ----------------

std::vector<double> uniform_grid(double t0, double t1, std::size_t n_points);
std::vector<double> log_grid(double t0, double t1, std::size_t n_points);
bool is_uniform(const std::vector<double>& g, double rel_tol = 1e-9);

// ---------------- cumulative integral of a smooth integrand ----------------

// F(t) = \int_{grid.front()}^{t} f(u) du, panel Gauss rule at build time,
// in-panel tails integrated on demand.  Evaluation anywhere inside the grid.
class CumulativeCurve {
 public:
  CumulativeCurve() = default;
  CumulativeCurve(std::function<double(double)> f, std::vector<double> grid,
                  int panel_nodes = 7);

  double operator()(double t) const;
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return cum_; }

 private:
  std::function<double(double)> f_;
  std::vector<double> grid_;
  std::vector<double> cum_;
};

// ---------------- interpolation ----------------

// local 4-point Lagrange cubic on a uniform grid; clamps at the ends
class UniformCubic {
 public:
  UniformCubic() = default;
  UniformCubic(double t0, double dt, std::vector<double> y);

  double operator()(double t) const;
  double front_time() const { return t0_; }
  double back_time() const { return t0_ + dt_ * static_cast<double>(y_.size() - 1); }
  const std::vector<double>& samples() const { return y_; }

 private:
  double t0_ = 0, dt_ = 1;
  std::vector<double> y_;
};

// Fritsch-Carlson monotone cubic Hermite on an increasing grid
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double operator()(double t) const;
  double derivative(double t) const;
  const std::vector<double>& xs() const { return x_; }
  const std::vector<double>& ys() const { return y_; }

 private:
  std::size_t locate(double t) const;
  std::vector<double> x_, y_, m_;  // m_: endpoint slopes
};

}  // namespace tgm
