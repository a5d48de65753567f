#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tgm/common.hpp"
#include "tgm/rng.hpp"

namespace tgm {

// One holding-time law: survival F-bar, density f, hazard f/F-bar, and the
// inverse CDF used for sampling.  support_truncation is the quantile beyond
// which the remaining mass is below truncation_eps.
struct SojournDistribution {
  std::function<double(double)> survival;
  std::function<double(double)> density;
  std::function<double(double)> hazard;
  std::function<double(double)> quantile;  // u in (0,1) -> t
  double support_truncation = 0;
  double truncation_eps = kTruncationEps;
  // set when the law is exponential; closed-form solvers require it
  std::optional<double> exp_rate;
  std::string label;

  // F-bar(t)/F-bar(s); requires t >= s >= 0 and F-bar(s) > 0
  double conditional_survival(double s, double t) const;

  double sample(Rng& rng) const { return quantile(rng.next_u01()); }
};

SojournDistribution exponential_sojourn(double rate, double eps = kTruncationEps);
SojournDistribution gamma_sojourn(double shape, double rate, double eps = kTruncationEps);
SojournDistribution weibull_sojourn(double shape, double scale, double eps = kTruncationEps);

// table of (t, survival) with t[0]=0, survival[0]=1, survival strictly
// decreasing; monotone cubic in log-survival, constant hazard beyond the table
SojournDistribution tabulated_sojourn(std::vector<double> t, std::vector<double> survival,
                                      double eps = kTruncationEps);

// law defined by its hazard rate on [0, grid.back()], constant extrapolation
// beyond; used when a distribution is synthesized from regime data
SojournDistribution sojourn_from_hazard(std::function<double(double)> hazard,
                                        std::vector<double> grid,
                                        double eps = kTruncationEps);

}  // namespace tgm
