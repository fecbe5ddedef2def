#pragma once

#include <cmath>
#include <string>

#include "survpp/error.hpp"
#include "survpp/rng.hpp"

namespace survpp {

struct SliceConfig {
  double width = 1.0;
  int max_stepout_doublings = 10;  // total step budget 2^doublings
};

// Univariate slice sampler: stepping out with a randomized step budget split
// between the two sides (which keeps the update reversible under the cap),
// then shrinkage. `log_density` need not be normalized.
template <typename F>
double slice_sample_1d(F&& log_density, double x0, const SliceConfig& cfg,
                       Rng& rng) {
  const double f0 = log_density(x0);
  if (!std::isfinite(f0))
    throw Error(ErrorKind::sampler,
                "slice sampler started at a point with non-finite log "
                "density (" + std::to_string(x0) + ")");
  const double log_level = f0 - rng.exponential(1.0);

  const double w = cfg.width;
  double left = x0 - w * rng.uniform();
  double right = left + w;
  const long budget = 1L << cfg.max_stepout_doublings;
  long steps_left = static_cast<long>(rng.uniform() * static_cast<double>(budget));
  long steps_right = budget - 1 - steps_left;

  while (steps_left-- > 0 && log_density(left) > log_level) left -= w;
  while (steps_right-- > 0 && log_density(right) > log_level) right += w;

  for (int iter = 0; iter < 1000; ++iter) {
    const double x1 = rng.uniform(left, right);
    const double f1 = log_density(x1);
    if (std::isnan(f1))
      throw Error(ErrorKind::sampler,
                  "log density evaluated to NaN at " + std::to_string(x1) +
                      " during slice shrinkage");
    if (f1 > log_level) return x1;
    if (x1 < x0)
      left = x1;
    else
      right = x1;
  }
  // the interval has collapsed onto x0 (possible only for pathological
  // densities); x0 itself is always on the slice
  return x0;
}

}  // namespace survpp
