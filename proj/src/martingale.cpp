#include "tgm/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "tgm/common.hpp"
#include "tgm/path.hpp"

namespace tgm {

namespace {

bool nondecreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] < v[k - 1]) return false;
  return true;
}

struct SampleStats {
  double mean = 0, se = 0;
};

SampleStats stats(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += x;
  const double mean = s / n;
  double q = 0;
  for (double x : v) q += (x - mean) * (x - mean);
  const double var = v.size() > 1 ? q / (n - 1) : 0.0;
  return {mean, std::sqrt(var / n)};
}

// sup_x |weighted ECDF - F(x)| over the sample points and the right endpoint
double weighted_ks_vs_cdf(std::vector<std::pair<double, double>> sample,  // (value, weight)
                          const std::function<double(double)>& cdf, double x_end,
                          double total_weight) {
  std::sort(sample.begin(), sample.end());
  double d = 0, cw = 0;
  for (std::size_t k = 0; k < sample.size(); ++k) {
    if (sample[k].first > x_end) break;
    const double before = cw / total_weight;
    cw += sample[k].second;
    // step over ties in one go
    while (k + 1 < sample.size() && sample[k + 1].first == sample[k].first) {
      ++k;
      cw += sample[k].second;
    }
    const double f = cdf(sample[k].first);
    d = std::max(d, std::max(std::abs(before - f), std::abs(cw / total_weight - f)));
  }
  d = std::max(d, std::abs(cw / total_weight - cdf(x_end)));
  return d;
}

// sup_x |weighted ECDF_a - ECDF_b|
double weighted_two_sample_ks(std::vector<std::pair<double, double>> a,  // (value, weight)
                              std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double wa = 0;
  for (const auto& p : a) wa += p.second;
  const double nb = static_cast<double>(b.size());
  double d = 0, ca = 0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() || ib < b.size()) {
    const double x = (ia < a.size() && (ib >= b.size() || a[ia].first <= b[ib]))
                         ? a[ia].first
                         : b[ib];
    while (ia < a.size() && a[ia].first == x) ca += a[ia++].second;
    while (ib < b.size() && b[ib] == x) ++ib;
    d = std::max(d, std::abs(ca / wa - static_cast<double>(ib) / nb));
  }
  return d;
}

}  // namespace

// ---------------- residual report ----------------

MartingaleReport martingale_residual(const ProcessModel& m, const std::vector<double>& t_grid) {
  require(!t_grid.empty() && t_grid.front() >= 0 && nondecreasing(t_grid),
          "martingale_residual: t_grid must be nondecreasing and nonnegative");
  require(t_grid.back() > 0, "martingale_residual: t_grid must extend past 0");

  const auto curves = build_regime_curves(m, t_grid.back());
  MartingaleReport rep;
  rep.t = t_grid;
  for (int i = 0; i < 2; ++i) {
    const auto& d = m.switching.dist[i];
    rep.residual[i].resize(t_grid.size());
    double prev_t = 0, prev_ratio = 0;
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      const double t = t_grid[k];
      const double cbar = curves.mean_velocity[i](t);
      const double h = curves.jump[i](t);
      rep.residual[i][k] = d.survival(t) * cbar + h * d.density(t);
      rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(rep.residual[i][k]));
      double ratio = 0;
      if (h != 0) {
        ratio = cbar / h;
        if (ratio >= 0) rep.sign_violations[i].push_back(t);
      } else if (cbar != 0) {
        rep.sign_violations[i].push_back(t);  // jump cannot compensate the drift
      }
      if (k > 0) rep.divergence_check[i] += 0.5 * (prev_ratio + ratio) * (t - prev_t);
      prev_t = t;
      prev_ratio = ratio;
    }
  }
  return rep;
}

// ---------------- sojourn laws from regimes ----------------

std::array<SojournDistribution, 2> martingale_density_from_regimes(
    const RegimePair& regimes, const std::vector<double>& t_grid) {
  require(t_grid.size() >= 2 && t_grid.front() == 0.0 && nondecreasing(t_grid) &&
              t_grid.back() > 0,
          "martingale_density_from_regimes: grid must start at 0 and increase");
  require(!regimes[0].velocity_depends_on_prev && !regimes[1].velocity_depends_on_prev,
          "martingale_density_from_regimes: velocity must not depend on the previous "
          "sojourn (the mean velocity would depend on the law being built)");

  std::array<SojournDistribution, 2> out;
  for (int i = 0; i < 2; ++i) {
    const auto c = [r = regimes[i]](double t) { return r.velocity(0.0, t); };
    const auto h = regimes[i].jump;

    std::string bad;
    int n_bad = 0;
    for (double t : t_grid) {
      const double ht = h(t);
      const double ct = c(t);
      if (ht == 0 ? ct != 0 : ct / ht >= 0) {
        if (n_bad < 8) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "%s%.6g", n_bad ? ", " : "", t);
          bad += buf;
        }
        ++n_bad;
      }
    }
    require(n_bad == 0, "martingale_density_from_regimes: state " + std::to_string(i) +
                            " needs velocity/jump of opposite signs; violated at t = {" +
                            bad + (n_bad > 8 ? ", ..." : "") + "}");

    auto alpha = [c, h](double t) {
      const double ht = h(t);
      return ht == 0 ? 0.0 : -c(t) / ht;
    };
    out[i] = sojourn_from_hazard(alpha, t_grid);
    out[i].label = "martingale state " + std::to_string(i);
    if (out[i].survival(t_grid.back()) > out[i].truncation_eps)
      std::fprintf(stderr,
                   "warning: martingale hazard for state %d keeps %.3g survival mass "
                   "past t = %g; extend the grid if the tail matters\n",
                   i, out[i].survival(t_grid.back()), t_grid.back());
  }
  return out;
}

// ---------------- measure change ----------------

void MeasureChangeSpec::validate() const {
  require(mu0 > 0 && mu1 > 0 && lambda0 > 0 && lambda1 > 0,
          "MeasureChangeSpec: all rates must be positive");
}

double weight_second_moment(const MeasureChangeSpec& spec, double t) {
  spec.validate();
  require(t >= 0, "weight_second_moment: t must be nonnegative");
  // v_i(t) = E_i[w(t)^2] solves v' = A v, v(0) = (1,1):
  // accrual 2 c*_i on the diagonal, switch factor (1+h*_i)^2 off it
  const double a = 2 * spec.c_star(0) - spec.mu0;
  const double b = spec.mu0 * (1 + spec.h_star(0)) * (1 + spec.h_star(0));
  const double c = spec.mu1 * (1 + spec.h_star(1)) * (1 + spec.h_star(1));
  const double d = 2 * spec.c_star(1) - spec.mu1;
  const double s = 0.5 * (a + d);
  const double q = std::sqrt(0.25 * (a - d) * (a - d) + b * c);
  if (q == 0) return std::exp(s * t) * (1 + t * (a - s + b));
  const double k = (a - s + b) / q;
  return 0.5 * (std::exp((s + q) * t) * (1 + k) + std::exp((s - q) * t) * (1 - k));
}

double radon_nikodym_weight(const MeasureChangeSpec& spec, const SwitchingFlow& flow,
                            double t) {
  spec.validate();
  require(t >= 0 && t <= flow.horizon, "radon_nikodym_weight: t outside the flow horizon");
  double log_w = 0;
  const std::size_t n_seg = flow.switch_times.size() + 1;
  for (std::size_t n = 0; n < n_seg; ++n) {
    const double start = flow.segment_start(n);
    if (start >= t) break;
    const int j = flow.state_of_segment(n);
    const double stop = n < flow.switch_times.size() ? flow.switch_times[n] : flow.horizon;
    log_w += spec.c_star(j) * (std::min(stop, t) - start);
    if (n < flow.switch_times.size() && flow.switch_times[n] <= t)
      log_w += std::log1p(spec.h_star(j));
  }
  return std::exp(log_w);
}

MeasureChangeReport verify_measure_change(const MeasureChangeSpec& spec,
                                          const RegimePair& regimes, double horizon,
                                          std::size_t n_paths, std::uint64_t seed,
                                          Exec exec) {
  spec.validate();
  require(horizon > 0, "verify_measure_change: horizon must be positive");
  require(n_paths >= 100, "verify_measure_change: need at least 100 paths");

  MeasureChangeReport rep;

  // the weight moves the rates, not the regimes, so it prices X only when the
  // regimes already satisfy the compensation identity at the target rates
  {
    ProcessModel target{{{exponential_sojourn(spec.lambda0), exponential_sojourn(spec.lambda1)},
                         0,
                         std::nullopt},
                        regimes};
    const auto curves = build_regime_curves(target, horizon);
    double scale = 1;
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k <= 256; ++k) {
        const double t = horizon * k / 256.0;
        const double res =
            std::abs(curves.mean_velocity[i](t) + spec.lambda(i) * curves.jump[i](t));
        scale = std::max(scale, std::abs(curves.mean_velocity[i](t)));
        rep.proportionality_residual = std::max(rep.proportionality_residual, res);
      }
    require(rep.proportionality_residual <= 1e-8 * scale,
            "verify_measure_change: regimes are not compensated at the target rates "
            "(residual " +
                std::to_string(rep.proportionality_residual) + ")");
  }

  const SwitchingModel phys{{exponential_sojourn(spec.mu0), exponential_sojourn(spec.mu1)},
                            0,
                            std::nullopt};
  const SwitchingModel phys1{{exponential_sojourn(spec.mu0), exponential_sojourn(spec.mu1)},
                             1,
                             std::nullopt};
  const SwitchingModel target{
      {exponential_sojourn(spec.lambda0), exponential_sojourn(spec.lambda1)}, 0, std::nullopt};

  // batch under the physical rates from state 0: weight, X, first sojourn
  std::vector<double> w(n_paths), x(n_paths), t1(n_paths);
  parallel_for(n_paths, exec, [&](std::size_t r) {
    const auto flow = generate_flow(phys, horizon, seed, r);
    w[r] = radon_nikodym_weight(spec, flow, horizon);
    x[r] = path_values(flow, regimes, {horizon})[0];
    t1[r] = flow.switch_times.empty() ? std::numeric_limits<double>::infinity()
                                      : flow.switch_times.front();
  });
  // first sojourn of the other state, with its own weights
  std::vector<double> w1(n_paths), t1b(n_paths);
  parallel_for(n_paths, exec, [&](std::size_t r) {
    const auto flow = generate_flow(phys1, horizon, seed ^ 0x9e3779b97f4a7c15ULL, r);
    w1[r] = radon_nikodym_weight(spec, flow, horizon);
    t1b[r] = flow.switch_times.empty() ? std::numeric_limits<double>::infinity()
                                       : flow.switch_times.front();
  });
  // direct simulation at the target rates for the distributional check
  const std::vector<double> x_direct = mc_terminal_values(
      target, regimes, horizon, n_paths, seed ^ 0x6a09e667f3bcc909ULL, exec);

  const auto ws = stats(w);
  rep.mean_weight = ws.mean;
  rep.se_mean_weight = ws.se;
  rep.se_mean_weight_exact =
      std::sqrt(std::max(weight_second_moment(spec, horizon) - 1.0, 0.0) /
                static_cast<double>(n_paths));
  // self-normalized estimator of the reweighted mean of X with its
  // delta-method error; the ratio form stays meaningful when the raw weight
  // sample is tail-dominated
  {
    double sw = 0, swx = 0;
    for (std::size_t r = 0; r < n_paths; ++r) {
      sw += w[r];
      swx += w[r] * x[r];
    }
    rep.weighted_mean_x = swx / sw;
    double q = 0;
    for (std::size_t r = 0; r < n_paths; ++r) {
      const double d = w[r] * (x[r] - rep.weighted_mean_x);
      q += d * d;
    }
    rep.se_weighted_mean_x = std::sqrt(q) / sw;
  }

  for (int i = 0; i < 2; ++i) {
    const auto& wi = i == 0 ? w : w1;
    const auto& ti = i == 0 ? t1 : t1b;
    std::vector<std::pair<double, double>> sample(n_paths);
    double sw = 0, sw2 = 0;
    for (std::size_t r = 0; r < n_paths; ++r) {
      sample[r] = {ti[r], wi[r]};
      sw += wi[r];
      sw2 += wi[r] * wi[r];
    }
    const double rate = spec.lambda(i);
    rep.sojourn_ks[i] = weighted_ks_vs_cdf(
        std::move(sample), [rate](double u) { return -std::expm1(-rate * u); }, horizon, sw);
    rep.sojourn_ks_critical[i] = 1.628 / std::sqrt(sw * sw / sw2);
  }

  {
    std::vector<std::pair<double, double>> sample(n_paths);
    double sw = 0, sw2 = 0;
    for (std::size_t r = 0; r < n_paths; ++r) {
      sample[r] = {x[r], w[r]};
      sw += w[r];
      sw2 += w[r] * w[r];
    }
    const double n_eff = sw * sw / sw2;
    const double m = static_cast<double>(n_paths);
    rep.weight_n_eff = n_eff;
    rep.x_ks = weighted_two_sample_ks(std::move(sample), x_direct);
    rep.x_ks_critical = 1.628 * std::sqrt((n_eff + m) / (n_eff * m));
  }

  rep.pass = std::abs(rep.mean_weight - 1.0) <= 3 * rep.se_mean_weight_exact &&
             std::abs(rep.weighted_mean_x) <= 3 * rep.se_weighted_mean_x &&
             rep.sojourn_ks[0] < rep.sojourn_ks_critical[0] &&
             rep.sojourn_ks[1] < rep.sojourn_ks_critical[1] && rep.x_ks < rep.x_ks_critical;
  return rep;
}

}  // namespace tgm
