#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

// shared statistical helpers for the test suite

inline double ks_one_sample(std::vector<double> draws,
                            const std::function<double(double)>& cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = cdf(draws[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0;
  std::size_t i = 0, j = 0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// critical values at the 1% level
inline double ks_crit_one(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

inline double ks_crit_two(std::size_t n, std::size_t m) {
  const double fn = static_cast<double>(n), fm = static_cast<double>(m);
  return 1.628 * std::sqrt((fn + fm) / (fn * fm));
}

// weighted one-sample KS with effective sample size (sum w)^2 / sum w^2
inline double ks_weighted(std::vector<std::pair<double, double>> xw,  // (x, weight)
                          const std::function<double(double)>& cdf, double& n_eff) {
  std::sort(xw.begin(), xw.end());
  double wsum = 0, w2sum = 0;
  for (const auto& p : xw) {
    wsum += p.second;
    w2sum += p.second * p.second;
  }
  n_eff = wsum * wsum / w2sum;
  double acc = 0, d = 0;
  for (const auto& p : xw) {
    const double f = cdf(p.first);
    d = std::max(d, std::abs(acc / wsum - f));
    acc += p.second;
    d = std::max(d, std::abs(acc / wsum - f));
  }
  return d;
}
