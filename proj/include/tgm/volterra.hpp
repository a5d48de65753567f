#pragma once

#include <array>
#include <functional>
#include <vector>

#include "tgm/sojourn.hpp"

namespace tgm {

// (1 - e^{-2 lambda t}) / (2 lambda), stable near t = 0; callers pass the
// half-sum convention lambda = (lambda0 + lambda1) / 2
double phi_lambda(double lambda, double t);

// Transition matrix exp(t Lambda) = I + phi(t) Lambda of the two-state chain
// with generator rows (-l0, l0) / (l1, -l1); rows sum to one.
struct MatrixExpLambda {
  double lambda0 = 0, lambda1 = 0;
  double entry(int i, int j, double t) const;
};

// ---------------- kernel measures ----------------

// A sub-probability measure w(u) f(u) du on [0, inf) described through the
// tail F-bar of f plus an optional smooth multiplier w.  Working from the
// tail keeps panel masses exact and sidesteps density singularities at 0.
struct VolterraKernel {
  std::function<double(double)> survival;           // F-bar of the base law
  std::function<double(double)> weight;             // optional smooth w(u)
  std::function<double(double)> weight_derivative;  // required iff weight set
  double truncation = 0;  // tail mass beyond this point is negligible
};

VolterraKernel sojourn_kernel(const SojournDistribution& d);
// e^{-rate u} f(u) du
VolterraKernel discounted_kernel(const SojournDistribution& d, double rate);

// integral of (w f) and (u w f) over [a, b], via tail integration by parts
double kernel_panel_mass(const VolterraKernel& k, double a, double b);
double kernel_panel_first_moment(const VolterraKernel& k, double a, double b);

// Piecewise-linear product weights on a uniform grid of step dt: the integral
// of g against the kernel over panel k is w0[k] g(t_k) + w1[k] g(t_{k+1})
// with w0[k] + w1[k] equal to the exact panel mass.  Panels beyond the kernel
// truncation are dropped (weights vector may be shorter than n_panels).
struct ProductWeights {
  double dt = 0;
  std::vector<double> w0, w1;
};
ProductWeights product_weights(const VolterraKernel& k, double dt, std::size_t n_panels);
// same weights for panels offset to [start + j dt, start + (j+1) dt]; g is
// still sampled at the local nodes j dt and (j+1) dt
ProductWeights product_weights_from(const VolterraKernel& k, double start, double dt,
                                    std::size_t n_panels);

// ---------------- coupled pair solver ----------------

// g_i(t) = b_i(t) + int_0^t g_{1-i}(t-u) k_i(du), stepped forward on a
// uniform grid with the product-trapezoidal rule; second order in dt.
struct VolterraPairProblem {
  std::array<VolterraKernel, 2> kernel;
  std::array<std::function<double(double)>, 2> forcing;
  double t_max = 0;
  std::size_t n_steps = 0;
};

struct PairSolution {
  std::vector<double> t;
  std::array<std::vector<double>, 2> g;
};

PairSolution solve_volterra_pair(const VolterraPairProblem& p);
// forcing already sampled on the uniform grid (n_steps + 1 values each)
PairSolution solve_volterra_pair(const std::array<VolterraKernel, 2>& kernel,
                                 const std::array<std::vector<double>, 2>& forcing,
                                 double t_max);

// ---------------- exponential-kernel closed form ----------------

// For exponential kernels the pair system is solved by
//   g(t) = b(t) + int_0^t exp{(t-u) Lambda} L b(u) du,
// evaluated at the requested times with panel Gauss quadrature and an
// incremental form of the exponential convolution (no solver grid involved).
std::array<std::vector<double>, 2> exp_kernel_solution(
    double lambda0, double lambda1, const std::function<double(double)>& b0,
    const std::function<double(double)>& b1, const std::vector<double>& times);

}  // namespace tgm
