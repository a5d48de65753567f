#include "tgm/market.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "tgm/math.hpp"
#include "tgm/volterra.hpp"

namespace tgm {

namespace {

// ---------------- validation helpers ----------------

double pick_horizon(const MarketModel& m, const OptionSpec& opt, const char* who) {
  const double u = opt.maturity > 0 ? opt.maturity : m.maturity;
  require(u > 0 && std::isfinite(u), std::string(who) + ": maturity must be positive");
  return u;
}

void probe_jump_floor(const RegimePair& regimes, double u, const char* who) {
  for (int i = 0; i < 2; ++i) {
    require(static_cast<bool>(regimes[i].jump),
            std::string(who) + ": regime jump function missing");
    for (int j = 0; j <= 512; ++j) {
      const double a = regimes[i].jump(u * static_cast<double>(j) / 512.0);
      require(std::isfinite(a) && a > -1.0,
              std::string(who) + ": jump amplitude at or below -1 in state " +
                  std::to_string(i));
    }
  }
}

double constant_velocity(const RegimeSpec& r, double u, const char* who) {
  require(static_cast<bool>(r.velocity), std::string(who) + ": velocity missing");
  const double c = r.velocity(0.0, 0.0);
  const double tol = 1e-12 * std::max(1.0, std::abs(c));
  for (double tp : {0.0, 0.31 * u, 0.77 * u, 1.21 * u})
    for (double tt : {0.0, 0.23 * u, 0.64 * u, u})
      require(std::abs(r.velocity(tp, tt) - c) <= tol,
              std::string(who) + ": constant velocities required");
  return c;
}

double constant_jump(const RegimeSpec& r, double u, const char* who) {
  require(static_cast<bool>(r.jump), std::string(who) + ": jump missing");
  const double h = r.jump(0.0);
  const double tol = 1e-12 * std::max(1.0, std::abs(h));
  for (double tp : {0.0, 0.19 * u, 0.56 * u, 0.93 * u, 1.37 * u})
    require(std::abs(r.jump(tp) - h) <= tol,
            std::string(who) + ": constant jump amplitudes required");
  return h;
}

// ---------------- uniform hermite slices ----------------

// monotone cubic slopes on a uniform grid (harmonic-mean limiter)
std::vector<double> hermite_slopes(const std::vector<double>& v, double inv_dx) {
  const std::size_t n = v.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  std::vector<double> s(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j) s[j] = (v[j + 1] - v[j]) * inv_dx;
  d[0] = s[0];
  d[n - 1] = s[n - 2];
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double p = s[j - 1] * s[j];
    d[j] = p <= 0.0 ? 0.0 : 2.0 * p / (s[j - 1] + s[j]);
  }
  return d;
}

// geometry of a log-spot grid plus the payoff-slope extrapolation rule:
// beyond the edges a slice continues linearly in the spot itself
struct GridGeom {
  double y0 = 0, y1 = 0, dx = 1, inv_dx = 1;
  double s_lo = 0, s_hi = 0;  // spots at the edges
  double slope_lo = 0, slope_hi = 0;
  std::size_t n = 0;

  double eval(const double* v, const double* d, double yq) const {
    if (yq <= y0) return v[0] + slope_lo * (std::exp(yq) - s_lo);
    if (yq >= y1) return v[n - 1] + slope_hi * (std::exp(yq) - s_hi);
    const double u = (yq - y0) * inv_dx;
    std::size_t j = static_cast<std::size_t>(u);
    if (j > n - 2) j = n - 2;
    const double th = u - static_cast<double>(j);
    const double t2 = th * th, t3 = t2 * th;
    const double m0 = d[j] * dx, m1 = d[j + 1] * dx;
    return v[j] * (2.0 * t3 - 3.0 * t2 + 1.0) + m0 * (t3 - 2.0 * t2 + th) +
           v[j + 1] * (3.0 * t2 - 2.0 * t3) + m1 * (t3 - t2);
  }
};

GridGeom make_geom(const std::vector<double>& y, double slope_lo, double slope_hi) {
  GridGeom g;
  g.y0 = y.front();
  g.y1 = y.back();
  g.n = y.size();
  g.dx = (g.y1 - g.y0) / static_cast<double>(g.n - 1);
  g.inv_dx = 1.0 / g.dx;
  g.s_lo = std::exp(g.y0);
  g.s_hi = std::exp(g.y1);
  g.slope_lo = slope_lo;
  g.slope_hi = slope_hi;
  return g;
}

void check_grid(const std::vector<double>& y, const char* who) {
  require(y.size() >= 8, std::string(who) + ": need at least 8 log-spot nodes");
  require(is_uniform(y), std::string(who) + ": log-spot grid must be uniform ascending");
}

void check_payoff_slice(const std::vector<double>& v, const char* who) {
  for (double x : v)
    require_numeric(std::isfinite(x) && x >= 0,
                    std::string(who) + ": payoff produced a negative or non-finite value");
}

}  // namespace

// ---------------- option builders ----------------

OptionSpec call_option(double strike) {
  require(strike > 0 && std::isfinite(strike), "call_option: strike must be positive");
  OptionSpec o;
  o.payoff = [strike](double x) { return x > strike ? x - strike : 0.0; };
  o.slope_lo = 0.0;
  o.slope_hi = 1.0;
  o.strike = strike;
  o.label = "call";
  return o;
}

OptionSpec put_option(double strike) {
  require(strike > 0 && std::isfinite(strike), "put_option: strike must be positive");
  OptionSpec o;
  o.payoff = [strike](double x) { return x < strike ? strike - x : 0.0; };
  o.slope_lo = -1.0;
  o.slope_hi = 0.0;
  o.strike = strike;
  o.label = "put";
  return o;
}

OptionSpec digital_option(double strike) {
  require(strike > 0 && std::isfinite(strike), "digital_option: strike must be positive");
  OptionSpec o;
  o.payoff = [strike](double x) { return x >= strike ? 1.0 : 0.0; };
  o.strike = strike;
  o.label = "digital";
  return o;
}

// ---------------- model transforms ----------------

MarketModel discounted_model(const MarketModel& m) {
  if (!m.rates) return m;
  MarketModel out = m;
  for (int i = 0; i < 2; ++i) {
    const RegimeSpec& c = m.regimes[i];
    const RegimeSpec& r = (*m.rates)[i];
    require(static_cast<bool>(c.velocity) && static_cast<bool>(r.velocity),
            "discounted_model: velocity missing");
    RegimeSpec d = c;
    d.velocity = [cv = c.velocity, rv = r.velocity](double tp, double t) {
      return cv(tp, t) - rv(tp, t);
    };
    if (c.has_antiderivative() && r.has_antiderivative()) {
      d.antiderivative = [ca = c.antiderivative, ra = r.antiderivative](double tp, double t) {
        return ca(tp, t) - ra(tp, t);
      };
    } else {
      d.antiderivative = nullptr;
    }
    d.velocity_depends_on_prev = c.velocity_depends_on_prev || r.velocity_depends_on_prev;
    if (!c.label.empty()) d.label = c.label + "-discounted";
    out.regimes[i] = d;
  }
  out.rates.reset();
  return out;
}

ProcessModel log_price_model(const MarketModel& m, int initial_state) {
  require(initial_state == 0 || initial_state == 1, "log_price_model: state must be 0 or 1");
  require(m.spot > 0, "log_price_model: spot must be positive");
  probe_jump_floor(m.regimes, m.maturity, "log_price_model");
  ProcessModel pm;
  pm.switching.dist = m.q_dist;
  pm.switching.initial_state = initial_state;
  pm.regimes = m.regimes;
  for (int i = 0; i < 2; ++i) {
    pm.regimes[i].jump = [h = m.regimes[i].jump](double tp) { return std::log1p(h(tp)); };
    if (!m.regimes[i].label.empty()) pm.regimes[i].label = m.regimes[i].label + "-log";
  }
  return pm;
}

// ---------------- path-level operations ----------------

PathRecord stochastic_exponential_path(const MarketModel& m, const SwitchingFlow& flow,
                                       const std::vector<double>& sample_times) {
  require(m.spot > 0, "stochastic_exponential_path: spot must be positive");
  require(std::is_sorted(sample_times.begin(), sample_times.end()),
          "stochastic_exponential_path: sample times must ascend");
  PathRecord rec;
  rec.flow = flow;
  rec.times = sample_times;
  rec.x = path_values(flow, m.regimes, sample_times);
  rec.jumps = jump_events(flow, m.regimes);
  for (const JumpEvent& e : rec.jumps)
    require_numeric(std::isfinite(e.amplitude) && 1.0 + e.amplitude > 0.0,
                    "stochastic_exponential_path: jump factor 1 + h is not positive at t = " +
                        std::to_string(e.time));
  if (!flow.switch_times.empty()) {
    rec.x_switch_post = path_values(flow, m.regimes, flow.switch_times);
    rec.x_switch_pre.resize(rec.jumps.size());
    for (std::size_t n = 0; n < rec.jumps.size(); ++n)
      rec.x_switch_pre[n] = rec.x_switch_post[n] - rec.jumps[n].amplitude;
  }
  rec.kappa.resize(sample_times.size());
  rec.price.resize(sample_times.size());
  double kap = 1.0, amp_sum = 0.0;
  std::size_t next = 0;
  for (std::size_t k = 0; k < sample_times.size(); ++k) {
    while (next < rec.jumps.size() && rec.jumps[next].time <= sample_times[k]) {
      kap *= 1.0 + rec.jumps[next].amplitude;
      amp_sum += rec.jumps[next].amplitude;
      ++next;
    }
    rec.kappa[k] = kap;
    rec.price[k] = m.spot * std::exp(rec.x[k] - amp_sum) * kap;
  }
  return rec;
}

double bond_factor(const RegimePair& rate_regime, const SwitchingFlow& flow, double t) {
  RegimePair rr = rate_regime;
  for (auto& r : rr) r.jump = [](double) { return 0.0; };
  return std::exp(path_values(flow, rr, {t})[0]);
}

// ---------------- default grid ----------------

std::vector<double> default_price_grid(const MarketModel& m, const OptionSpec& opt,
                                       std::size_t n_nodes) {
  const char* who = "default_price_grid";
  require(n_nodes >= 8, std::string(who) + ": need at least 8 nodes");
  const double u = pick_horizon(m, opt, who);
  MarketModel mm = m;
  mm.maturity = u;
  const ProcessModel pm = log_price_model(mm, 0);
  const bool expo = m.q_dist[0].exp_rate && m.q_dist[1].exp_rate;
  const MomentCurves mc =
      expo ? moment_values(pm, {u})
           : moment_curves(pm, u, 128, SolveMethod::grid, VarianceMode::exact, Exec::serial);
  const double var = std::max({mc.sigma[0].back(), mc.sigma[1].back(), 0.0});
  const double half = std::max(6.0 * std::sqrt(var), 0.05);
  double lo = std::log(m.spot) - half, hi = std::log(m.spot) + half;
  if (opt.strike) {
    require(*opt.strike > 0, std::string(who) + ": strike must be positive");
    const double ky = std::log(*opt.strike);
    lo = std::min(lo, ky - 0.25 * half);
    hi = std::max(hi, ky + 0.25 * half);
  }
  return uniform_grid(lo, hi, n_nodes);
}

// ---------------- surface accessor ----------------

double PriceSurface::value_at(double spot, double time, int state, double elapsed) const {
  require(state == 0 || state == 1, "value_at: state must be 0 or 1");
  require(spot > 0 && std::isfinite(spot), "value_at: spot must be positive");
  require(t.size() >= 2 && y.size() >= 2, "value_at: empty surface");
  const double ttol = 1e-9 * std::max(1.0, std::abs(t.back()));
  require(time >= t.front() - ttol && time <= t.back() + ttol,
          "value_at: time outside the surface");
  const double tc = std::min(std::max(time, t.front()), t.back());
  const double dtg = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  double u = (tc - t.front()) / dtg;
  std::size_t k0 = static_cast<std::size_t>(u);
  if (k0 > t.size() - 2) k0 = t.size() - 2;
  const double ft = std::min(std::max(u - static_cast<double>(k0), 0.0), 1.0);

  const GridGeom geo = make_geom(y, slope_lo, slope_hi);
  const double yq = std::log(spot);
  const auto eval_slice = [&](const std::vector<double>& v) {
    const std::vector<double> d = hermite_slopes(v, geo.inv_dx);
    return geo.eval(v.data(), d.data(), yq);
  };

  if (elapsed <= 0) {
    const auto& sheet = value[state];
    require(sheet.size() == t.size(), "value_at: surface slices missing");
    return (1.0 - ft) * eval_slice(sheet[k0]) + ft * eval_slice(sheet[k0 + 1]);
  }

  require(!s_grid.empty(), "value_at: surface holds no elapsed-sojourn slices");
  const double stol = 1e-9 * std::max(1.0, s_grid.back());
  require(elapsed >= s_grid.front() - stol && elapsed <= s_grid.back() + stol,
          "value_at: elapsed time outside the s grid");
  const double sc = std::min(std::max(elapsed, s_grid.front()), s_grid.back());
  std::size_t si = 0;
  while (si + 2 < s_grid.size() && s_grid[si + 1] < sc) ++si;
  double fs = 0.0;
  if (s_grid.size() >= 2) {
    fs = (sc - s_grid[si]) / (s_grid[si + 1] - s_grid[si]);
    fs = std::min(std::max(fs, 0.0), 1.0);
  }
  const auto blend = [&](std::size_t sj) {
    const auto& sheet = conditional[state][sj];
    require(sheet.size() == t.size(), "value_at: conditional slices missing");
    return (1.0 - ft) * eval_slice(sheet[k0]) + ft * eval_slice(sheet[k0 + 1]);
  };
  if (s_grid.size() == 1) return blend(0);
  return (1.0 - fs) * blend(si) + fs * blend(si + 1);
}

// ---------------- fundamental solver ----------------

PriceSurface solve_fundamental(const MarketModel& m, const OptionSpec& opt,
                               std::vector<double> y, const FundamentalOptions& fo,
                               Exec exec) {
  const char* who = "solve_fundamental";
  require(m.spot > 0, std::string(who) + ": spot must be positive");
  require(static_cast<bool>(opt.payoff), std::string(who) + ": payoff missing");
  check_grid(y, who);
  require(fo.n_steps >= 2, std::string(who) + ": need at least 2 time panels");
  require(fo.n_tau >= 1 && fo.n_tau <= 1024, std::string(who) + ": bad n_tau");
  const double U = pick_horizon(m, opt, who);
  const std::size_t K = fo.n_steps;
  const double dt = U / static_cast<double>(K);
  const std::size_t nx = y.size();
  for (std::size_t si = 0; si < fo.s_grid.size(); ++si) {
    require(fo.s_grid[si] > 0 && std::isfinite(fo.s_grid[si]),
            std::string(who) + ": elapsed times must be positive");
    if (si > 0)
      require(fo.s_grid[si] > fo.s_grid[si - 1],
              std::string(who) + ": elapsed times must ascend");
  }
  const double s_max = fo.s_grid.empty() ? 0.0 : fo.s_grid.back();

  // local-time discounting from the rate regimes
  std::array<std::function<double(double)>, 2> disc;
  if (m.rates) {
    for (int i = 0; i < 2; ++i) {
      const RegimeSpec& rr = (*m.rates)[i];
      require(!rr.velocity_depends_on_prev,
              std::string(who) + ": rates reading the previous sojourn are not supported "
                                 "here; price the discounted_model instead");
      require(static_cast<bool>(rr.velocity), std::string(who) + ": rate function missing");
      CumulativeCurve R([f = rr.velocity](double u) { return f(0.0, u); },
                        uniform_grid(0.0, U + s_max + 2.0 * dt, 513));
      disc[i] = [R](double u) { return std::exp(-R(u)); };
    }
  }

  // sojourn kernels, discount-weighted when rates are present
  std::array<VolterraKernel, 2> kern;
  std::array<ProductWeights, 2> pw;
  for (int i = 0; i < 2; ++i) {
    kern[i] = sojourn_kernel(m.q_dist[i]);
    if (m.rates) {
      kern[i].weight = disc[i];
      kern[i].weight_derivative = [d = disc[i], f = (*m.rates)[i].velocity](double u) {
        return -f(0.0, u) * d(u);
      };
    }
    pw[i] = product_weights(kern[i], dt, K);
  }

  // previous-sojourn quadrature (single zero node when velocities ignore it)
  std::array<std::vector<double>, 2> tau_nodes, tau_w;
  for (int i = 0; i < 2; ++i) {
    if (m.regimes[i].velocity_depends_on_prev) {
      const auto& gl = gauss_legendre(static_cast<int>(fo.n_tau));
      tau_nodes[i].resize(fo.n_tau);
      tau_w[i].resize(fo.n_tau);
      for (std::size_t q = 0; q < fo.n_tau; ++q) {
        tau_nodes[i][q] = m.q_dist[1 - i].quantile(0.5 * (1.0 + gl.x[q]));
        tau_w[i][q] = 0.5 * gl.w[q];
      }
    } else {
      tau_nodes[i] = {0.0};
      tau_w[i] = {1.0};
    }
  }

  // displacement and jump tables at the panel nodes, laid out q * (K+1) + j
  const double span = y.back() - y.front();
  std::array<std::vector<double>, 2> L, shiftc, eta;
  double max_shift = 0;
  for (int i = 0; i < 2; ++i) {
    require(static_cast<bool>(m.regimes[i].jump) && static_cast<bool>(m.regimes[i].velocity),
            std::string(who) + ": regime functions missing");
    eta[i].resize(K + 1);
    for (std::size_t j = 0; j <= K; ++j) {
      const double a = m.regimes[i].jump(dt * static_cast<double>(j));
      require(std::isfinite(a) && a > -1.0,
              std::string(who) + ": jump amplitude at or below -1 in state " +
                  std::to_string(i));
      eta[i][j] = std::log1p(a);
    }
    const std::size_t nq = tau_nodes[i].size();
    L[i].assign(nq * (K + 1), 0.0);
    shiftc[i].assign(nq * (K + 1), 0.0);
    for (std::size_t q = 0; q < nq; ++q) {
      double* Lq = L[i].data() + q * (K + 1);
      double* Sq = shiftc[i].data() + q * (K + 1);
      Sq[0] = eta[i][0];
      for (std::size_t j = 1; j <= K; ++j) {
        Lq[j] = Lq[j - 1] + segment_displacement(m.regimes[i], tau_nodes[i][q],
                                                 dt * static_cast<double>(j - 1),
                                                 dt * static_cast<double>(j), 0.0);
        Sq[j] = Lq[j] + eta[i][j];
        max_shift = std::max({max_shift, std::abs(Lq[j]), std::abs(Sq[j])});
      }
    }
  }
  require(max_shift <= 0.5 * span,
          std::string(who) + ": displacements exceed half the log-spot span; widen the grid");

  // no-switch survival (and discount) factors
  std::array<std::vector<double>, 2> fb;
  for (int i = 0; i < 2; ++i) {
    fb[i].resize(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
      const double v = dt * static_cast<double>(k);
      fb[i][k] = m.q_dist[i].survival(v) * (m.rates ? disc[i](v) : 1.0);
    }
  }

  const GridGeom geo = make_geom(y, opt.slope_lo, opt.slope_hi);

  // slices indexed by time-to-go v = k dt
  std::array<std::vector<std::vector<double>>, 2> vals, ders;
  for (int i = 0; i < 2; ++i) {
    vals[i].assign(K + 1, std::vector<double>(nx));
    ders[i].assign(K + 1, std::vector<double>());
  }
  for (std::size_t ix = 0; ix < nx; ++ix) vals[0][0][ix] = opt.payoff(std::exp(y[ix]));
  check_payoff_slice(vals[0][0], who);
  vals[1][0] = vals[0][0];
  ders[0][0] = hermite_slopes(vals[0][0], geo.inv_dx);
  ders[1][0] = ders[0][0];

  // the terminal slice is evaluated from the payoff itself, not interpolated
  const auto sample = [&](int st, std::size_t kv, double yq) -> double {
    if (kv == 0) return opt.payoff(std::exp(yq));
    return geo.eval(vals[st][kv].data(), ders[st][kv].data(), yq);
  };

  std::array<std::vector<double>, 2> fixed_buf, cand, cand_d;
  for (int i = 0; i < 2; ++i) {
    fixed_buf[i].resize(nx);
    cand[i].resize(nx);
  }

  for (std::size_t k = 1; k <= K; ++k) {
    // payoff term plus the interior convolution nodes
    for (int i = 0; i < 2; ++i) {
      const int o = 1 - i;
      const auto& w0 = pw[i].w0;
      const auto& w1 = pw[i].w1;
      const std::size_t jmax = std::min(k, w0.size());
      const std::size_t nq = tau_nodes[i].size();
      const double* Lt = L[i].data();
      const double* Sc = shiftc[i].data();
      const double* tw = tau_w[i].data();
      const double fbk = fb[i][k];
      parallel_for(nx, exec, [&, i, o, jmax, nq, fbk](std::size_t ix) {
        const double yx = y[ix];
        double acc = 0;
        if (fbk != 0) {
          double pf = 0;
          for (std::size_t q = 0; q < nq; ++q)
            pf += tw[q] * opt.payoff(std::exp(yx + Lt[q * (K + 1) + k]));
          acc = fbk * pf;
        }
        for (std::size_t j = 0; j < jmax; ++j) {
          if (j > 0 && w0[j] != 0.0) {
            double sv = 0;
            for (std::size_t q = 0; q < nq; ++q)
              sv += tw[q] * sample(o, k - j, yx + Sc[q * (K + 1) + j]);
            acc += w0[j] * sv;
          }
          if (w1[j] != 0.0) {
            double sv = 0;
            for (std::size_t q = 0; q < nq; ++q)
              sv += tw[q] * sample(o, k - j - 1, yx + Sc[q * (K + 1) + j + 1]);
            acc += w1[j] * sv;
          }
        }
        fixed_buf[i][ix] = acc;
      });
    }

    // corner node: the j = 0 left endpoint touches the slice being built.
    // Predict it by linear extrapolation in time, then correct once.
    for (int i = 0; i < 2; ++i) {
      const int o = 1 - i;
      const double c0 = pw[i].w0.empty() ? 0.0 : pw[i].w0[0];
      const double e0 = eta[i][0];
      if (c0 == 0.0) {
        cand[i] = fixed_buf[i];
        continue;
      }
      parallel_for(nx, exec, [&, i, o, c0, e0](std::size_t ix) {
        const double ys = y[ix] + e0;
        const double guess = (k >= 2) ? 2.0 * sample(o, k - 1, ys) - sample(o, k - 2, ys)
                                      : sample(o, 0, ys);
        cand[i][ix] = fixed_buf[i][ix] + c0 * guess;
      });
    }
    for (int i = 0; i < 2; ++i) cand_d[i] = hermite_slopes(cand[i], geo.inv_dx);
    for (int i = 0; i < 2; ++i) {
      const int o = 1 - i;
      const double c0 = pw[i].w0.empty() ? 0.0 : pw[i].w0[0];
      const double e0 = eta[i][0];
      auto& out = vals[i][k];
      if (c0 == 0.0) {
        out = fixed_buf[i];
      } else {
        parallel_for(nx, exec, [&, i, o, c0, e0](std::size_t ix) {
          out[ix] = fixed_buf[i][ix] +
                    c0 * geo.eval(cand[o].data(), cand_d[o].data(), y[ix] + e0);
        });
      }
      ders[i][k] = hermite_slopes(out, geo.inv_dx);
    }
  }

  PriceSurface surf;
  surf.t = uniform_grid(0.0, U, K + 1);
  surf.normalized = fo.normalized;
  surf.s_grid = fo.s_grid;
  surf.slope_lo = opt.slope_lo;
  surf.slope_hi = opt.slope_hi;
  for (int i = 0; i < 2; ++i) {
    surf.value[i].assign(K + 1, std::vector<double>());
    for (std::size_t k = 0; k <= K; ++k) surf.value[i][K - k] = vals[i][k];
  }

  // conditional slices: an elapsed sojourn s shifts the first-switch law and
  // the first-segment displacement; the tail always lands on the
  // unconditional sheets, so each slice is fully explicit
  for (int i = 0; i < 2 && !fo.s_grid.empty(); ++i)
    surf.conditional[i].resize(fo.s_grid.size());
  for (std::size_t si = 0; si < fo.s_grid.size(); ++si) {
    const double s = fo.s_grid[si];
    for (int i = 0; i < 2; ++i) {
      const int o = 1 - i;
      const double fbs = m.q_dist[i].survival(s);
      require_numeric(fbs > 1e-300,
                      std::string(who) + ": survival underflow at the elapsed time");
      const double ds0 = m.rates ? disc[i](s) : 1.0;
      const double scale = fo.normalized ? 1.0 / (fbs * ds0) : 1.0 / ds0;
      ProductWeights ow = product_weights_from(kern[i], s, dt, K);
      for (double& w : ow.w0) w *= scale;
      for (double& w : ow.w1) w *= scale;

      const std::size_t nq = tau_nodes[i].size();
      std::vector<double> Ls(nq * (K + 1), 0.0), Scs(nq * (K + 1), 0.0), etas(K + 1);
      for (std::size_t j = 0; j <= K; ++j) {
        const double a = m.regimes[i].jump(s + dt * static_cast<double>(j));
        require(std::isfinite(a) && a > -1.0,
                std::string(who) + ": jump amplitude at or below -1 in state " +
                    std::to_string(i));
        etas[j] = std::log1p(a);
      }
      double ms = 0;
      for (std::size_t q = 0; q < nq; ++q) {
        double* Lq = Ls.data() + q * (K + 1);
        double* Sq = Scs.data() + q * (K + 1);
        Sq[0] = etas[0];
        for (std::size_t j = 1; j <= K; ++j) {
          Lq[j] = Lq[j - 1] + segment_displacement(m.regimes[i], tau_nodes[i][q],
                                                   s + dt * static_cast<double>(j - 1),
                                                   s + dt * static_cast<double>(j), 0.0);
          Sq[j] = Lq[j] + etas[j];
          ms = std::max({ms, std::abs(Lq[j]), std::abs(Sq[j])});
        }
      }
      require(ms <= 0.5 * span,
              std::string(who) +
                  ": displacements exceed half the log-spot span; widen the grid");

      std::vector<double> fbk_s(K + 1);
      for (std::size_t k = 0; k <= K; ++k) {
        const double vs = s + dt * static_cast<double>(k);
        fbk_s[k] = m.q_dist[i].survival(vs) * (m.rates ? disc[i](vs) : 1.0) * scale;
      }

      surf.conditional[i][si].assign(K + 1, std::vector<double>(nx));
      for (std::size_t k = 0; k <= K; ++k) {
        auto& out = surf.conditional[i][si][K - k];
        const std::size_t jmax = std::min(k, ow.w0.size());
        const double fbk = fbk_s[k];
        const double* Lt = Ls.data();
        const double* Sc = Scs.data();
        const double* tw = tau_w[i].data();
        parallel_for(nx, exec, [&, i, o, jmax, fbk, nq](std::size_t ix) {
          const double yx = y[ix];
          double pf = 0;
          for (std::size_t q = 0; q < nq; ++q)
            pf += tw[q] * opt.payoff(std::exp(yx + Lt[q * (K + 1) + k]));
          double acc = fbk * pf;
          for (std::size_t j = 0; j < jmax; ++j) {
            if (ow.w0[j] != 0.0) {
              double sv = 0;
              for (std::size_t q = 0; q < nq; ++q)
                sv += tw[q] * sample(o, k - j, yx + Sc[q * (K + 1) + j]);
              acc += ow.w0[j] * sv;
            }
            if (ow.w1[j] != 0.0) {
              double sv = 0;
              for (std::size_t q = 0; q < nq; ++q)
                sv += tw[q] * sample(o, k - j - 1, yx + Sc[q * (K + 1) + j + 1]);
              acc += ow.w1[j] * sv;
            }
          }
          out[ix] = acc;
        });
      }
    }
  }

  surf.y = std::move(y);
  return surf;
}

// ---------------- constant-parameter solver ----------------

PriceSurface solve_pde_constant(const MarketModel& m, const OptionSpec& opt,
                                std::vector<double> y, std::size_t n_steps, Exec exec) {
  const char* who = "solve_pde_constant";
  require(m.spot > 0, std::string(who) + ": spot must be positive");
  require(static_cast<bool>(opt.payoff), std::string(who) + ": payoff missing");
  check_grid(y, who);
  require(n_steps >= 2, std::string(who) + ": need at least 2 time steps");
  const double U = pick_horizon(m, opt, who);
  const std::size_t K = n_steps;
  const double dt = U / static_cast<double>(K);
  const std::size_t nx = y.size();

  std::array<double, 2> lam{}, c{}, h{}, r{}, eta{};
  for (int i = 0; i < 2; ++i) {
    require(m.q_dist[i].exp_rate.has_value(),
            std::string(who) + ": exponential sojourn laws required");
    lam[i] = *m.q_dist[i].exp_rate;
    c[i] = constant_velocity(m.regimes[i], U, who);
    h[i] = constant_jump(m.regimes[i], U, who);
    require(h[i] > -1.0, std::string(who) + ": jump amplitude at or below -1 in state " +
                             std::to_string(i));
    eta[i] = std::log1p(h[i]);
    if (m.rates) {
      r[i] = constant_velocity((*m.rates)[i], U, who);
      require(r[i] >= 0, std::string(who) + ": negative rate");
    }
  }

  const double span = y.back() - y.front();
  double max_shift = 0;
  for (int i = 0; i < 2; ++i)
    max_shift = std::max(max_shift, std::abs(c[i]) * dt + std::abs(eta[i]));
  require(max_shift <= 0.5 * span,
          std::string(who) + ": displacements exceed half the log-spot span; widen the grid");

  // exact exponential-time-differencing weights for the coupling integral
  std::array<double, 2> decay{}, cw0{}, cw1{};
  for (int i = 0; i < 2; ++i) {
    const double a = r[i] + lam[i];
    decay[i] = std::exp(-a * dt);
    double W, M;
    if (a * dt < 1e-8) {
      W = dt * (1.0 - 0.5 * a * dt);
      M = dt * dt * (0.5 - a * dt / 3.0);
    } else {
      W = -std::expm1(-a * dt) / a;
      M = dt * W - (1.0 - decay[i] - a * dt * decay[i]) / (a * a);
    }
    cw1[i] = lam[i] * M / dt;
    cw0[i] = lam[i] * (W - M / dt);
  }

  const GridGeom geo = make_geom(y, opt.slope_lo, opt.slope_hi);

  std::array<std::vector<std::vector<double>>, 2> vals, ders;
  for (int i = 0; i < 2; ++i) {
    vals[i].assign(K + 1, std::vector<double>(nx));
    ders[i].assign(K + 1, std::vector<double>());
  }
  for (std::size_t ix = 0; ix < nx; ++ix) vals[0][0][ix] = opt.payoff(std::exp(y[ix]));
  check_payoff_slice(vals[0][0], who);
  vals[1][0] = vals[0][0];
  ders[0][0] = hermite_slopes(vals[0][0], geo.inv_dx);
  ders[1][0] = ders[0][0];

  const auto sample = [&](int st, std::size_t kv, double yq) -> double {
    if (kv == 0) return opt.payoff(std::exp(yq));
    return geo.eval(vals[st][kv].data(), ders[st][kv].data(), yq);
  };

  std::array<std::vector<double>, 2> base, cand, cand_d;
  for (int i = 0; i < 2; ++i) {
    base[i].resize(nx);
    cand[i].resize(nx);
  }

  for (std::size_t k = 1; k <= K; ++k) {
    for (int i = 0; i < 2; ++i) {
      const int o = 1 - i;
      const double cdt = c[i] * dt;
      parallel_for(nx, exec, [&, i, o, cdt](std::size_t ix) {
        const double yx = y[ix];
        double acc = decay[i] * sample(i, k - 1, yx + cdt);
        if (cw0[i] != 0.0) acc += cw0[i] * sample(o, k - 1, yx + cdt + eta[i]);
        base[i][ix] = acc;
        if (cw1[i] != 0.0) {
          const double ys = yx + eta[i];
          const double guess = (k >= 2) ? 2.0 * sample(o, k - 1, ys) - sample(o, k - 2, ys)
                                        : sample(o, 0, ys);
          acc += cw1[i] * guess;
        }
        cand[i][ix] = acc;
      });
    }
    for (int i = 0; i < 2; ++i) cand_d[i] = hermite_slopes(cand[i], geo.inv_dx);
    for (int i = 0; i < 2; ++i) {
      const int o = 1 - i;
      auto& out = vals[i][k];
      if (cw1[i] == 0.0) {
        out = base[i];
      } else {
        parallel_for(nx, exec, [&, i, o](std::size_t ix) {
          out[ix] = base[i][ix] +
                    cw1[i] * geo.eval(cand[o].data(), cand_d[o].data(), y[ix] + eta[i]);
        });
      }
      ders[i][k] = hermite_slopes(out, geo.inv_dx);
    }
  }

  PriceSurface surf;
  surf.t = uniform_grid(0.0, U, K + 1);
  surf.slope_lo = opt.slope_lo;
  surf.slope_hi = opt.slope_hi;
  for (int i = 0; i < 2; ++i) {
    surf.value[i].assign(K + 1, std::vector<double>());
    for (std::size_t k = 0; k <= K; ++k) surf.value[i][K - k] = std::move(vals[i][k]);
  }
  surf.y = std::move(y);
  return surf;
}

// ---------------- monte carlo ----------------

McPrice mc_price(const MarketModel& m, const OptionSpec& opt, std::size_t n_paths,
                 std::uint64_t seed, Exec exec) {
  const char* who = "mc_price";
  require(static_cast<bool>(opt.payoff), std::string(who) + ": payoff missing");
  require(n_paths >= 2, std::string(who) + ": need at least 2 paths");
  const double U = pick_horizon(m, opt, who);
  MarketModel mm = m;
  mm.maturity = U;

  McPrice out;
  out.n_paths = n_paths;
  std::vector<double> v(n_paths);
  for (int i = 0; i < 2; ++i) {
    const ProcessModel pm = log_price_model(mm, i);
    parallel_for(n_paths, exec, [&, i](std::size_t rpl) {
      const auto flow =
          generate_flow(pm.switching, U, seed, rpl + static_cast<std::uint64_t>(i) * n_paths);
      const double x = path_values(flow, pm.regimes, {U})[0];
      double val = opt.payoff(m.spot * std::exp(x));
      if (m.rates) val /= bond_factor(*m.rates, flow, U);
      v[rpl] = val;
    });
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n_paths);
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double var = ss / static_cast<double>(n_paths - 1);
    out.price[i] = mean;
    out.se[i] = std::sqrt(var / static_cast<double>(n_paths));
    require_numeric(std::isfinite(mean) && std::isfinite(out.se[i]),
                    std::string(who) + ": non-finite payoff sample");
  }
  return out;
}

}  // namespace tgm
