#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ftsdiff/errors.hpp"
#include "ftsdiff/parallel.hpp"
#include "ftsdiff/rng.hpp"

namespace fts {

// Monte Carlo sample of the limiting ratio
//   B(1) / ( (1/(n-1)) sum_i eta_i^2 (B(eta_i) - eta_i B(1))^2 )^(1/2),
// B standard Brownian motion, eta_i = i/n. Draws are stored in path order;
// path p is seeded independently of all others, so generation parallelizes
// without affecting the result.
struct PivotSample {
  std::vector<double> draws;
  int nu_n = 20;
  long n_paths = 0;
  long n_steps = 0;
  std::uint64_t seed = 0;
  // Sign-flip symmetry check: |median| <= 3*IQR/sqrt(n_paths). Informative
  // only; a false value signals a broken generator, not a user error.
  bool median_symmetric = true;
};

namespace detail {

inline double pivot_draw(Xoshiro256pp& rng, int nu_n, long n_steps) {
  const long stride = n_steps / nu_n;
  const double step_sd = std::sqrt(1.0 / static_cast<double>(n_steps));
  double b = 0.0;
  std::vector<double> nodes(static_cast<std::size_t>(nu_n));
  for (int i = 0; i < nu_n; ++i) {
    for (long s = 0; s < stride; ++s) b += step_sd * rng.next_normal();
    nodes[static_cast<std::size_t>(i)] = b;
  }
  const double b1 = nodes.back();
  double acc = 0.0;
  for (int i = 1; i < nu_n; ++i) {
    const double eta = static_cast<double>(i) / nu_n;
    const double bridge = nodes[static_cast<std::size_t>(i - 1)] - eta * b1;
    acc += eta * eta * bridge * bridge;
  }
  acc /= static_cast<double>(nu_n - 1);
  if (acc == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return b1 / std::sqrt(acc);
}

}  // namespace detail

inline PivotSample simulate_pivot(int nu_n, long n_paths, long n_steps,
                                  std::uint64_t seed) {
  require_config(nu_n >= 3, "nu_n must be >= 3");
  require_config(n_paths >= 1000, "n_paths must be >= 1000");
  require_config(n_steps >= nu_n && n_steps % nu_n == 0,
                 "n_steps must be a positive multiple of nu_n");
  PivotSample out;
  out.nu_n = nu_n;
  out.n_paths = n_paths;
  out.n_steps = n_steps;
  out.seed = seed;
  out.draws.assign(static_cast<std::size_t>(n_paths), 0.0);
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
    Xoshiro256pp rng(derive_seed(seed, "pivot-path", p));
    double d = detail::pivot_draw(rng, nu_n, n_steps);
    // Zero denominator has probability 0; redraw from a fresh substream.
    for (std::uint64_t attempt = 1; std::isnan(d); ++attempt) {
      Xoshiro256pp retry(
          derive_seed(seed, "pivot-path-retry", p * 1024 + attempt));
      d = detail::pivot_draw(retry, nu_n, n_steps);
    }
    out.draws[p] = d;
  });

  std::vector<double> sorted = out.draws;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = sorted[n / 2];
  const double iqr = sorted[(3 * n) / 4] - sorted[n / 4];
  out.median_symmetric =
      std::abs(median) <= 3.0 * iqr / std::sqrt(static_cast<double>(n));
  return out;
}

// Order-statistic quantile: inverse empirical CDF (lower interpolation),
// q_p = x_(ceil(n*p)) in 1-based order statistics.
inline double quantile(const PivotSample& sample, double p) {
  require_config(p > 0.0 && p < 1.0, "quantile level must lie in (0,1)");
  require_config(!sample.draws.empty(), "empty pivot sample");
  std::vector<double> sorted = sample.draws;
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<long>(std::ceil(n * p - 1e-9));
  rank = std::max<long>(1, std::min<long>(rank, sorted.size()));
  return sorted[static_cast<std::size_t>(rank - 1)];
}

// Monte Carlo P(D >= value); +inf maps to 0, -inf to 1.
inline double pivot_p_value(const PivotSample& sample, double value) {
  require_config(!sample.draws.empty(), "empty pivot sample");
  std::size_t count = 0;
  for (double d : sample.draws)
    if (d >= value) ++count;
  return static_cast<double>(count) / static_cast<double>(sample.draws.size());
}

}  // namespace fts
