#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "ftsdiff/errors.hpp"
#include "ftsdiff/operator_matrix.hpp"
#include "ftsdiff/parallel.hpp"
#include "ftsdiff/series.hpp"
#include "ftsdiff/window.hpp"

namespace fts {

// floor(eta*T) with a nudge: grid fractions i/n can land ulps below the
// exact rational, which would drop a full observation.
inline Eigen::Index subsample_length(double eta, Eigen::Index sample_length) {
  return static_cast<Eigen::Index>(
      std::floor(eta * static_cast<double>(sample_length) + 1e-9));
}

namespace detail {

// Unnormalized lag products S_h = sum_t x_{t+h} x_t^T over the first m rows,
// for h = 0..m-1. Normalizing by m gives the lag-h autocovariance.
inline std::vector<Eigen::MatrixXd> lag_products(const Eigen::MatrixXd& x,
                                                 Eigen::Index m) {
  std::vector<Eigen::MatrixXd> s(static_cast<std::size_t>(m));
  for (Eigen::Index h = 0; h < m; ++h)
    s[static_cast<std::size_t>(h)] =
        x.middleRows(h, m - h).transpose() * x.middleRows(0, m - h);
  return s;
}

// Assembles the lag-window sum (2pi)^-1 * sum_{|h|<m} w(bh) e^{-i w h} C_h
// from precomputed C_h, h >= 0. Hermitian by construction since
// C_{-h} = C_h^T and w is even.
inline OperatorMatrix assemble_lag_window(
    const std::vector<Eigen::MatrixXd>& autocov, double omega,
    const WindowSpec& window, double bandwidth) {
  const Eigen::Index d = autocov.front().rows();
  Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(d, d);
  for (std::size_t h = 1; h < autocov.size(); ++h) {
    const double wh = window(bandwidth * static_cast<double>(h));
    if (wh == 0.0) continue;
    z += (wh * std::polar(1.0, -omega * static_cast<double>(h))) * autocov[h];
  }
  Eigen::MatrixXcd f = autocov[0].cast<std::complex<double>>();
  f += z + z.adjoint().eval();
  f *= 1.0 / (2.0 * M_PI);
  return OperatorMatrix{std::move(f), omega};
}

}  // namespace detail

// Lag-h sample autocovariance from the first m observations:
// (1/m) sum_t x_{t+h} x_t^T, both time indices within 1..m.
inline Eigen::MatrixXd autocov_lag(const FunctionalSeries& series,
                                   Eigen::Index h, Eigen::Index m) {
  require_config(m >= 1 && m <= series.length(),
                 "autocov_lag: m must lie in [1, T]");
  const Eigen::Index ah = h < 0 ? -h : h;
  require_config(ah < m, "autocov_lag: |h| must be smaller than m");
  const auto& x = series.coeffs();
  Eigen::MatrixXd c = x.middleRows(ah, m - ah).transpose() *
                      x.middleRows(0, m - ah) / static_cast<double>(m);
  if (h < 0) return c.transpose();
  return c;
}

// Sequential lag-window estimate of the spectral density operator from the
// first floor(eta*T) observations, computed in the O(T) lag-sum form.
inline OperatorMatrix sequential_estimate(const FunctionalSeries& series,
                                          double eta, double omega,
                                          const WindowSpec& window,
                                          double bandwidth) {
  require_config(bandwidth > 0.0 && bandwidth <= 1.0,
                 "bandwidth must lie in (0,1]");
  require_config(eta > 0.0 && eta <= 1.0, "eta must lie in (0,1]");
  const Eigen::Index m = subsample_length(eta, series.length());
  if (m < 2) throw config_error("window too short: floor(eta*T) must be >= 2");
  auto s = detail::lag_products(series.coeffs(), m);
  for (auto& mat : s) mat /= static_cast<double>(m);
  return detail::assemble_lag_window(s, omega, window, bandwidth);
}

// The full-sample estimator is the sequential one at eta = 1.
inline OperatorMatrix spectral_estimate(const FunctionalSeries& series,
                                        double omega, const WindowSpec& window,
                                        double bandwidth) {
  return sequential_estimate(series, 1.0, omega, window, bandwidth);
}

// Grid of sequential estimates over (fraction, frequency).
struct SpectralEstimate {
  std::vector<double> freqs;      // equispaced on [band_lo, band_hi]
  std::vector<double> fractions;  // sorted, in (0, 1]
  // ops[fraction_index][freq_index]
  std::vector<std::vector<OperatorMatrix>> ops;
  double band_lo = 0.0;
  double band_hi = M_PI;
  Eigen::Index sample_length = 0;
  double bandwidth = 0.0;
  WindowKind window = WindowKind::daniell;

  const OperatorMatrix& at(std::size_t fraction_idx,
                           std::size_t freq_idx) const {
    return ops[fraction_idx][freq_idx];
  }
};

inline std::vector<double> frequency_grid(double lo, double hi, int n_freq) {
  require_config(lo >= 0.0 && hi <= M_PI + 1e-12 && lo <= hi,
                 "frequency band must satisfy 0 <= a <= b <= pi");
  require_config(n_freq >= 1, "n_freq must be >= 1");
  if (lo == hi) return {lo};
  require_config(n_freq >= 2, "n_freq must be >= 2 for a non-degenerate band");
  std::vector<double> freqs(static_cast<std::size_t>(n_freq));
  for (int i = 0; i < n_freq; ++i)
    freqs[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / (n_freq - 1);
  return freqs;
}

inline SpectralEstimate spectral_surface(const FunctionalSeries& series,
                                         double band_lo, double band_hi,
                                         int n_freq,
                                         const std::vector<double>& fractions,
                                         const WindowSpec& window,
                                         const BandwidthRule& rule) {
  require_config(!fractions.empty(), "fraction grid must not be empty");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    require_config(fractions[i] > 0.0 && fractions[i] <= 1.0,
                   "fractions must lie in (0,1]");
    require_config(i == 0 || fractions[i] > fractions[i - 1],
                   "fractions must be strictly increasing");
  }
  SpectralEstimate out;
  out.freqs = frequency_grid(band_lo, band_hi, n_freq);
  out.fractions = fractions;
  out.band_lo = band_lo;
  out.band_hi = band_hi;
  out.sample_length = series.length();
  out.bandwidth = rule.bandwidth(series.length());
  out.window = window.kind;
  out.ops.resize(fractions.size());
  // Smallest fraction decides feasibility; checked up front so the parallel
  // loop cannot throw halfway through.
  if (subsample_length(fractions.front(), series.length()) < 2)
    throw config_error("window too short: floor(eta*T) must be >= 2");

  parallel_for(fractions.size(), [&](std::size_t fi) {
    const Eigen::Index m =
        subsample_length(out.fractions[fi], series.length());
    auto autocov = detail::lag_products(series.coeffs(), m);
    for (auto& mat : autocov) mat /= static_cast<double>(m);
    auto& row = out.ops[fi];
    row.reserve(out.freqs.size());
    for (double omega : out.freqs)
      row.push_back(
          detail::assemble_lag_window(autocov, omega, window, out.bandwidth));
  });
  return out;
}

}  // namespace fts
