#include "tgm/sojourn.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <memory>
#include <utility>

#include "tgm/math.hpp"

namespace tgm {

double SojournDistribution::conditional_survival(double s, double t) const {
  require(s >= 0 && t >= s, "conditional_survival: need 0 <= s <= t");
  if (s == 0) return survival(t);
  const double fs = survival(s);
  require(fs > 0, "conditional_survival: survival vanishes at the conditioning time");
  return survival(t) / fs;
}

SojournDistribution exponential_sojourn(double rate, double eps) {
  require(rate > 0, "exponential_sojourn: rate must be positive");
  require(eps > 0 && eps < 1, "exponential_sojourn: bad truncation eps");
  SojournDistribution d;
  d.survival = [rate](double t) { return t <= 0 ? 1.0 : std::exp(-rate * t); };
  d.density = [rate](double t) { return t < 0 ? 0.0 : rate * std::exp(-rate * t); };
  d.hazard = [rate](double) { return rate; };
  d.quantile = [rate](double u) { return -std::log1p(-u) / rate; };
  d.support_truncation = -std::log(eps) / rate;
  d.truncation_eps = eps;
  d.exp_rate = rate;
  d.label = "exponential(" + std::to_string(rate) + ")";
  return d;
}

SojournDistribution gamma_sojourn(double shape, double rate, double eps) {
  require(shape > 0 && rate > 0, "gamma_sojourn: shape and rate must be positive");
  require(eps > 0 && eps < 1, "gamma_sojourn: bad truncation eps");
  SojournDistribution d;
  d.survival = [shape, rate](double t) {
    return t <= 0 ? 1.0 : boost::math::gamma_q(shape, rate * t);
  };
  d.density = [shape, rate](double t) {
    if (t < 0) return 0.0;
    if (t == 0) return shape < 1 ? std::numeric_limits<double>::infinity()
                                 : (shape == 1 ? rate : 0.0);
    return rate * boost::math::gamma_p_derivative(shape, rate * t);
  };
  d.hazard = [d_density = d.density, d_survival = d.survival](double t) {
    return d_density(t) / d_survival(t);
  };
  d.quantile = [shape, rate](double u) {
    return boost::math::gamma_p_inv(shape, u) / rate;
  };
  d.support_truncation = boost::math::gamma_q_inv(shape, eps) / rate;
  d.truncation_eps = eps;
  if (shape == 1.0) d.exp_rate = rate;
  d.label = "gamma(" + std::to_string(shape) + "," + std::to_string(rate) + ")";
  return d;
}

SojournDistribution weibull_sojourn(double shape, double scale, double eps) {
  require(shape > 0 && scale > 0, "weibull_sojourn: shape and scale must be positive");
  require(eps > 0 && eps < 1, "weibull_sojourn: bad truncation eps");
  SojournDistribution d;
  const double k = shape, s = scale;
  d.survival = [k, s](double t) { return t <= 0 ? 1.0 : std::exp(-std::pow(t / s, k)); };
  d.density = [k, s](double t) {
    if (t < 0) return 0.0;
    if (t == 0) return k < 1 ? std::numeric_limits<double>::infinity() : (k == 1 ? 1.0 / s : 0.0);
    const double z = std::pow(t / s, k - 1);
    return (k / s) * z * std::exp(-z * (t / s));
  };
  d.hazard = [k, s](double t) {
    if (t <= 0) return k < 1 ? std::numeric_limits<double>::infinity() : (k == 1 ? 1.0 / s : 0.0);
    return (k / s) * std::pow(t / s, k - 1);
  };
  d.quantile = [k, s](double u) { return s * std::pow(-std::log1p(-u), 1.0 / k); };
  d.support_truncation = s * std::pow(-std::log(eps), 1.0 / k);
  d.truncation_eps = eps;
  if (k == 1.0) d.exp_rate = 1.0 / s;
  d.label = "weibull(" + std::to_string(shape) + "," + std::to_string(scale) + ")";
  return d;
}

namespace {

// shared machinery for laws given by log-survival as a monotone cubic plus a
// constant hazard tail
struct LogSurvivalTable {
  MonotoneCubic logsv;  // log survival on [0, t_end], decreasing
  double t_end = 0;
  double logsv_end = 0;
  double tail_hazard = 0;

  double log_survival(double t) const {
    if (t <= 0) return 0.0;
    if (t <= t_end) return logsv(t);
    return logsv_end - tail_hazard * (t - t_end);
  }
  double hazard_at(double t) const {
    if (t <= 0) return -logsv.derivative(0.0);
    if (t <= t_end) return -logsv.derivative(t);
    return tail_hazard;
  }
  // t with log-survival == target (target < 0), bisection then Newton polish
  double inverse(double target) const {
    if (target >= 0) return 0.0;
    if (target <= logsv_end) {
      require(tail_hazard > 0,
              "sojourn table: tail hazard vanishes, quantile beyond the table is undefined");
      return t_end + (logsv_end - target) / tail_hazard;
    }
    double lo = 0, hi = t_end;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (log_survival(mid) > target)
        lo = mid;
      else
        hi = mid;
      if (hi - lo < 1e-15 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
  }
};

SojournDistribution from_log_survival(LogSurvivalTable tab, double eps, std::string label) {
  auto t = std::make_shared<LogSurvivalTable>(std::move(tab));
  SojournDistribution d;
  d.survival = [t](double x) { return std::exp(t->log_survival(x)); };
  d.hazard = [t](double x) { return t->hazard_at(x); };
  d.density = [t](double x) {
    return x < 0 ? 0.0 : t->hazard_at(x) * std::exp(t->log_survival(x));
  };
  d.quantile = [t](double u) { return t->inverse(std::log1p(-u)); };
  d.support_truncation = t->inverse(std::log(eps));
  d.truncation_eps = eps;
  d.label = std::move(label);
  return d;
}

}  // namespace

SojournDistribution tabulated_sojourn(std::vector<double> t, std::vector<double> survival,
                                      double eps) {
  require(t.size() == survival.size() && t.size() >= 2, "tabulated_sojourn: bad table sizes");
  require(t.front() == 0.0 && survival.front() == 1.0,
          "tabulated_sojourn: table must start at (0, 1)");
  for (std::size_t i = 1; i < t.size(); ++i) {
    require(t[i] > t[i - 1], "tabulated_sojourn: times must increase");
    require(survival[i] > 0 && survival[i] < survival[i - 1],
            "tabulated_sojourn: survival must be strictly decreasing and positive");
  }
  std::vector<double> logsv(survival.size());
  for (std::size_t i = 0; i < survival.size(); ++i) logsv[i] = std::log(survival[i]);

  LogSurvivalTable tab;
  tab.t_end = t.back();
  tab.logsv_end = logsv.back();
  tab.logsv = MonotoneCubic(std::move(t), std::move(logsv));
  tab.tail_hazard = std::max(0.0, -tab.logsv.derivative(tab.t_end));
  require(tab.tail_hazard > 0 || std::exp(tab.logsv_end) <= eps,
          "tabulated_sojourn: table ends with vanishing hazard before reaching the "
          "truncation mass");
  return from_log_survival(std::move(tab), eps, "tabulated");
}

namespace {

// survival taken directly from the integrated hazard; everything stays
// consistent with the exact rate callable, constant hazard beyond the grid
struct HazardLaw {
  std::function<double(double)> hazard;
  CumulativeCurve cum;
  double t_end, cum_end, tail_hazard;

  double log_survival(double t) const {
    if (t <= 0) return 0.0;
    if (t <= t_end) return -cum(t);
    return -cum_end - tail_hazard * (t - t_end);
  }
  double hazard_at(double t) const { return t <= t_end ? hazard(std::max(t, 0.0)) : tail_hazard; }
  double inverse(double target) const {  // log-survival == target < 0
    if (target >= 0) return 0.0;
    if (target <= -cum_end) {
      require(tail_hazard > 0,
              "sojourn_from_hazard: hazard vanishes at the grid end, quantile beyond the "
              "grid is undefined");
      return t_end + (-cum_end - target) / tail_hazard;
    }
    double lo = 0, hi = t_end;
    for (int i = 0; i < 48 && hi - lo > 1e-14 * (1.0 + hi); ++i) {
      const double mid = 0.5 * (lo + hi);
      (log_survival(mid) > target ? lo : hi) = mid;
    }
    double t = 0.5 * (lo + hi);
    for (int i = 0; i < 3; ++i) {  // Newton polish
      const double hz = hazard_at(t);
      if (hz <= 0) break;
      t = std::clamp(t + (log_survival(t) - target) / hz, lo, hi);
    }
    return t;
  }
};

}  // namespace

SojournDistribution sojourn_from_hazard(std::function<double(double)> hazard,
                                        std::vector<double> grid, double eps) {
  require(grid.size() >= 2 && grid.front() == 0.0, "sojourn_from_hazard: grid must start at 0");
  require(eps > 0 && eps < 1, "sojourn_from_hazard: bad truncation eps");
  auto law = std::make_shared<HazardLaw>();
  law->cum = CumulativeCurve(hazard, grid);
  law->t_end = grid.back();
  law->cum_end = law->cum.values().back();
  law->tail_hazard = std::max(hazard(grid.back()), 0.0);
  law->hazard = std::move(hazard);

  SojournDistribution d;
  d.survival = [law](double t) { return std::exp(law->log_survival(t)); };
  d.hazard = [law](double t) { return law->hazard_at(t); };
  d.density = [law](double t) {
    return t < 0 ? 0.0 : law->hazard_at(t) * std::exp(law->log_survival(t));
  };
  d.quantile = [law](double u) { return law->inverse(std::log1p(-u)); };
  d.support_truncation = law->inverse(std::log(eps));
  d.truncation_eps = eps;
  d.label = "hazard-defined";
  // the constant-hazard tail is a small correction, not a crutch: if reaching
  // the truncation mass needs a tail many times the grid span, the hazard has
  // effectively died inside the grid and the law is not usable as a sojourn
  require(d.support_truncation <= 50.0 * law->t_end,
          "sojourn_from_hazard: hazard decays before the grid accumulates the sojourn "
          "mass; extend the grid or fix the rate");
  return d;
}

}  // namespace tgm
