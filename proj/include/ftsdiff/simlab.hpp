#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ftsdiff/errors.hpp"
#include "ftsdiff/hypothesis.hpp"
#include "ftsdiff/parallel.hpp"
#include "ftsdiff/rng.hpp"
#include "ftsdiff/separable.hpp"
#include "ftsdiff/series.hpp"

namespace fts {

enum class ScenarioId { bb_shift, bb_amplitude, ar_shift, ar_dependence };

inline std::string to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::bb_shift: return "bb-shift";
    case ScenarioId::bb_amplitude: return "bb-amplitude";
    case ScenarioId::ar_shift: return "ar-shift";
    case ScenarioId::ar_dependence: return "ar-dependence";
  }
  return "?";
}

inline ScenarioId scenario_by_name(const std::string& name) {
  if (name == "bb-shift") return ScenarioId::bb_shift;
  if (name == "bb-amplitude") return ScenarioId::bb_amplitude;
  if (name == "ar-shift") return ScenarioId::ar_shift;
  if (name == "ar-dependence") return ScenarioId::ar_dependence;
  throw config_error("unknown scenario: " + name);
}

struct ScenarioSpec {
  ScenarioId id = ScenarioId::bb_shift;
  Eigen::Index length = 128;
  int dimension = 21;  // 21 for the bb scenarios, 4 for the ar ones
  double param = 0.0;  // shift, amplitude exponent, shift, or dependence
  std::uint64_t seed = 0;

  void validate() const {
    require_config(length >= 8, "scenario length must be >= 8");
    require_config(dimension >= 2, "scenario dimension must be >= 2");
    switch (id) {
      case ScenarioId::bb_shift:
        require_config(param >= 0.0 && param <= 0.15,
                       "bb-shift parameter must lie in [0, 0.15]");
        break;
      case ScenarioId::bb_amplitude:
        require_config(param >= 0.0 && param <= 8.0,
                       "bb-amplitude exponent must lie in [0, 8]");
        break;
      case ScenarioId::ar_shift:
        require_config(param >= 0.0 && param <= 0.25,
                       "ar-shift parameter must lie in [0, 0.25]");
        break;
      case ScenarioId::ar_dependence:
        require_config(param >= 0.0 && param <= 0.6,
                       "ar-dependence parameter must lie in [0, 0.6]");
        break;
    }
  }

  static ScenarioSpec make(ScenarioId id, Eigen::Index length, double param,
                           std::uint64_t seed) {
    ScenarioSpec s;
    s.id = id;
    s.length = length;
    s.dimension =
        (id == ScenarioId::ar_shift || id == ScenarioId::ar_dependence) ? 4
                                                                        : 21;
    s.param = param;
    s.seed = seed;
    s.validate();
    return s;
  }
};

// I.i.d. curves with the covariance of a Brownian bridge upscaled by 2pi,
// synthesized from the known eigenexpansion truncated at d terms, with the
// eigenfunction family sin(pi k tau) shifted by `shift` and the standard
// deviation multiplied by `amplitude_factor`. The population spectral
// density operator is flat in omega with eigenvalues 1/(pi k)^2 at
// shift = 0, factor = 1.
inline Eigen::MatrixXd gen_bb_raw(Eigen::Index length, int dimension,
                                  double shift, double amplitude_factor,
                                  std::uint64_t seed, int grid_points = 1000) {
  require_config(length >= 8, "need at least 8 observations");
  require_config(dimension >= 2, "need dimension >= 2");
  require_config(amplitude_factor > 0.0, "amplitude factor must be positive");
  require_config(grid_points >= 2 * dimension,
                 "grid too coarse for the basis dimension");
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(grid_points, 0.0, 1.0);
  // Shifted eigenfunction samples, scaled by sqrt(2pi * lambda_k) * factor.
  Eigen::MatrixXd shapes(dimension, grid_points);
  const double amp = amplitude_factor * std::sqrt(2.0 * M_PI);
  for (int k = 1; k <= dimension; ++k) {
    const double scale = amp * std::sqrt(2.0) / (M_PI * k);
    for (int g = 0; g < grid_points; ++g)
      shapes(k - 1, g) = scale * std::sin(M_PI * k * (grid[g] + shift));
  }
  Xoshiro256pp rng(derive_seed(seed, "bb-series"));
  Eigen::MatrixXd scores(length, dimension);
  for (Eigen::Index t = 0; t < length; ++t)
    for (int k = 0; k < dimension; ++k) scores(t, k) = rng.next_normal();
  return scores * shapes;  // T x G curve samples
}

inline FunctionalSeries gen_bb_series(Eigen::Index length, int dimension,
                                      double shift, double amplitude_factor,
                                      std::uint64_t seed,
                                      int grid_points = 1000) {
  const Eigen::MatrixXd raw = gen_bb_raw(length, dimension, shift,
                                         amplitude_factor, seed, grid_points);
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(grid_points, 0.0, 1.0);
  const auto basis = BasisSpec::fourier(dimension);
  return project_to_basis(raw, basis, grid).series;
}

// Curves driven by a 4-dimensional AR(1) coefficient process
// chi_t = c chi_{t-1} + sqrt(1-c^2) eps_t, eps ~ N(0, diag(4, 8, 0.5, 1.5)),
// mapped through sqrt2 sin(2pi tau), sqrt2 cos(2pi(tau+shift)),
// sqrt2 sin(4pi tau), sqrt2 cos(4pi tau). The sqrt(1-c^2) scaling keeps the
// stationary variance equal to the noise variance for every c.
inline FunctionalSeries gen_far_series(Eigen::Index length, double c,
                                       double shift, std::uint64_t seed,
                                       int burn_in = 200) {
  require_config(std::abs(c) < 1.0, "AR coefficient must satisfy |c| < 1");
  require_config(length >= 8, "need at least 8 observations");
  static const double noise_sd[4] = {2.0, std::sqrt(8.0), std::sqrt(0.5),
                                     std::sqrt(1.5)};
  Xoshiro256pp rng(derive_seed(seed, "ar-series"));
  const double innov = std::sqrt(1.0 - c * c);
  Eigen::Vector4d chi = Eigen::Vector4d::Zero();
  Eigen::MatrixXd coeffs(length, 4);
  const double theta = 2.0 * M_PI * shift;
  const double sin_t = std::sin(theta), cos_t = std::cos(theta);
  for (Eigen::Index t = 0; t < burn_in + length; ++t) {
    for (int j = 0; j < 4; ++j)
      chi[j] = c * chi[j] + innov * noise_sd[j] * rng.next_normal();
    if (t >= burn_in) {
      const Eigen::Index r = t - burn_in;
      // cos(2pi(tau+shift)) expanded in the unshifted sin/cos pair.
      coeffs(r, 0) = chi[0] - sin_t * chi[1];
      coeffs(r, 1) = cos_t * chi[1];
      coeffs(r, 2) = chi[2];
      coeffs(r, 3) = chi[3];
    }
  }
  const auto basis = BasisSpec::fourier(4, 0.0, 1.0, /*include_constant=*/false);
  return FunctionalSeries(std::move(coeffs), basis);
}

// X side of a scenario: the parameter-free baseline.
inline FunctionalSeries generate_scenario(const ScenarioSpec& spec,
                                          bool baseline,
                                          std::uint64_t seed) {
  spec.validate();
  switch (spec.id) {
    case ScenarioId::bb_shift:
      return gen_bb_series(spec.length, spec.dimension,
                           baseline ? 0.0 : spec.param, 1.0, seed);
    case ScenarioId::bb_amplitude:
      return gen_bb_series(spec.length, spec.dimension, 0.0,
                           baseline ? 1.0 : std::pow(1.2, spec.param), seed);
    case ScenarioId::ar_shift:
      return gen_far_series(spec.length, 0.3, baseline ? 0.0 : spec.param,
                            seed);
    case ScenarioId::ar_dependence:
      return gen_far_series(spec.length, baseline ? 0.0 : spec.param, 0.0,
                            seed);
  }
  throw config_error("unknown scenario");
}

// Synthetic separable Gaussian field on a voxel grid: independent draws of
// sum_{jkl} sqrt(w1_j w2_k w3_l) xi_{jkl} u1_j (x) u2_k (x) u3_l with
// orthonormal discrete-sine directional shapes and weights w_r = 1/r^2.
// mix_direction in {1,2,3} replaces that direction's first two shapes by
// their rotated pair (u1+u2)/sqrt2, (u1-u2)/sqrt2: directional eigenvalues
// are unchanged, eigenvectors are not.
inline SeparableSeries3D gen_separable_series(Eigen::Index length,
                                              std::array<int, 3> sizes,
                                              std::uint64_t seed,
                                              int mix_direction = 0,
                                              int rank_per_direction = 3) {
  require_config(length >= 8, "need at least 8 observations");
  require_config(mix_direction >= 0 && mix_direction <= 3,
                 "mix_direction must be 0..3");
  std::array<Eigen::MatrixXd, 3> shapes;  // G_i x R_i, scaled by sqrt weight
  std::array<int, 3> ranks{};
  for (int i = 0; i < 3; ++i) {
    const int g = sizes[static_cast<std::size_t>(i)];
    require_config(g >= 2, "all axis sizes must be >= 2");
    const int r = std::min(g, rank_per_direction);
    ranks[static_cast<std::size_t>(i)] = r;
    Eigen::MatrixXd u(g, r);
    for (int c = 0; c < r; ++c)
      for (int row = 0; row < g; ++row)
        u(row, c) = std::sqrt(2.0 / (g + 1)) *
                    std::sin(M_PI * (c + 1) * (row + 1) / (g + 1));
    if (mix_direction == i + 1 && r >= 2) {
      const Eigen::VectorXd a = u.col(0), b = u.col(1);
      u.col(0) = (a + b) / std::sqrt(2.0);
      u.col(1) = (a - b) / std::sqrt(2.0);
    }
    for (int c = 0; c < r; ++c) u.col(c) *= 1.0 / (c + 1);  // sqrt(1/(c+1)^2)
    shapes[static_cast<std::size_t>(i)] = u;
  }
  Xoshiro256pp rng(derive_seed(seed, "separable-series"));
  const int g1 = sizes[0], g2 = sizes[1], g3 = sizes[2];
  Eigen::MatrixXd data(length, static_cast<Eigen::Index>(g1) * g2 * g3);
  for (Eigen::Index t = 0; t < length; ++t) {
    data.row(t).setZero();
    for (int j = 0; j < ranks[0]; ++j)
      for (int k = 0; k < ranks[1]; ++k)
        for (int l = 0; l < ranks[2]; ++l) {
          const double score = rng.next_normal();
          for (int i1 = 0; i1 < g1; ++i1) {
            const double f1 = score * shapes[0](i1, j);
            for (int i2 = 0; i2 < g2; ++i2) {
              const double f12 = f1 * shapes[1](i2, k);
              for (int i3 = 0; i3 < g3; ++i3)
                data(t, (static_cast<Eigen::Index>(i1) * g2 + i2) * g3 + i3) +=
                    f12 * shapes[2](i3, l);
            }
          }
        }
  }
  std::array<BasisSpec, 3> bases{BasisSpec::raw_grid(g1),
                                 BasisSpec::raw_grid(g2),
                                 BasisSpec::raw_grid(g3)};
  return SeparableSeries3D(std::move(data), sizes, bases);
}

// ---------------------------------------------------------------------------
// Population threshold oracle.

namespace detail {

// Spectral density operator of the (shifted, scaled) Brownian-bridge model
// in the orthonormal sine basis {sqrt2 sin(pi a tau)}: omega-constant.
// Expansion coefficients of the shifted eigenfunctions are closed form.
inline Eigen::MatrixXd bb_spectral_matrix(double shift, double amp_factor,
                                          int kl_terms, int sine_terms) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(sine_terms, sine_terms);
  const double var = amp_factor * amp_factor;
  Eigen::VectorXd coeff(sine_terms);
  for (int k = 1; k <= kl_terms; ++k) {
    const double lambda = 1.0 / (M_PI * k) / (M_PI * k);
    const double ck = std::cos(M_PI * k * shift);
    const double sk = std::sin(M_PI * k * shift);
    for (int a = 1; a <= sine_terms; ++a) {
      double v = (a == k) ? ck : 0.0;
      if (((a + k) & 1) != 0)
        v += 4.0 * a * sk /
             (M_PI * (static_cast<double>(a) * a - static_cast<double>(k) * k));
      coeff[a - 1] = v;
    }
    f += (var * lambda) * coeff * coeff.transpose();
  }
  return f;
}

// AR model shape operator in the orthonormal basis
// {sqrt2 sin 2pi, sqrt2 cos 2pi, sqrt2 sin 4pi, sqrt2 cos 4pi}; the spectral
// density operator is rho_c(omega) times this matrix.
inline Eigen::Matrix4d ar_shape_matrix(double shift) {
  const double theta = 2.0 * M_PI * shift;
  Eigen::Vector4d v1(1.0, 0.0, 0.0, 0.0);
  Eigen::Vector4d v2(-std::sin(theta), std::cos(theta), 0.0, 0.0);
  Eigen::Vector4d v3(0.0, 0.0, 1.0, 0.0);
  Eigen::Vector4d v4(0.0, 0.0, 0.0, 1.0);
  return 4.0 * v1 * v1.transpose() + 8.0 * v2 * v2.transpose() +
         0.5 * v3 * v3.transpose() + 1.5 * v4 * v4.transpose();
}

// Scalar AR(1) spectral density with unit stationary variance:
// (1-c^2) / (2pi |1 - c e^{-i omega}|^2).
inline double ar_rho(double c, double omega) {
  return (1.0 - c * c) /
         (2.0 * M_PI * (1.0 + c * c - 2.0 * c * std::cos(omega)));
}

struct SymmetricEigens {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns follow values
};

inline SymmetricEigens symmetric_eigens(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  require_numeric(solver.info() == Eigen::Success, "eigendecomposition failed");
  const Eigen::Index d = m.rows();
  SymmetricEigens out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    out.values[j] = solver.eigenvalues()[d - 1 - j];
    out.vectors.col(j) = solver.eigenvectors().col(d - 1 - j);
  }
  return out;
}

inline double pointwise_distance(const Eigen::MatrixXd& fx,
                                 const Eigen::MatrixXd& fy,
                                 HypothesisKind kind, int k) {
  if (kind == HypothesisKind::operator_norm) return (fx - fy).squaredNorm();
  const auto ex = symmetric_eigens(fx);
  const auto ey = symmetric_eigens(fy);
  require_config(k >= 1 && k <= ex.values.size(),
                 "component index exceeds operator dimension");
  if (kind == HypothesisKind::eigenvalue) {
    const double diff = ex.values[k - 1] - ey.values[k - 1];
    return diff * diff;
  }
  const double ip = ex.vectors.col(k - 1).dot(ey.vectors.col(k - 1));
  return std::clamp(2.0 - 2.0 * ip * ip, 0.0, 2.0);
}

}  // namespace detail

// Band-averaged population distance between the two sides of a scenario,
// from the closed-form population spectra. Same quadrature as the tests:
// trapezoid on an equispaced n_freq grid, divided by the band width.
inline double population_threshold(ScenarioId id, double param_x,
                                   double param_y, HypothesisKind kind, int k,
                                   double band_lo = 0.0,
                                   double band_hi = M_PI, int n_freq = 64,
                                   int kl_terms = 21, int sine_terms = 256) {
  require_config(k >= 1, "component index must be >= 1");
  if (id == ScenarioId::bb_shift || id == ScenarioId::bb_amplitude) {
    const bool amplitude = id == ScenarioId::bb_amplitude;
    const double shift_x = amplitude ? 0.0 : param_x;
    const double shift_y = amplitude ? 0.0 : param_y;
    const double amp_x = amplitude ? std::pow(1.2, param_x) : 1.0;
    const double amp_y = amplitude ? std::pow(1.2, param_y) : 1.0;
    const auto fx =
        detail::bb_spectral_matrix(shift_x, amp_x, kl_terms, sine_terms);
    const auto fy =
        detail::bb_spectral_matrix(shift_y, amp_y, kl_terms, sine_terms);
    // Flat in omega: the band average equals the pointwise value.
    return detail::pointwise_distance(fx, fy, kind, k);
  }
  const double c_x = id == ScenarioId::ar_dependence ? param_x : 0.3;
  const double c_y = id == ScenarioId::ar_dependence ? param_y : 0.3;
  const double shift_x = id == ScenarioId::ar_shift ? param_x : 0.0;
  const double shift_y = id == ScenarioId::ar_shift ? param_y : 0.0;
  const Eigen::Matrix4d kx = detail::ar_shape_matrix(shift_x);
  const Eigen::Matrix4d ky = detail::ar_shape_matrix(shift_y);
  const auto freqs = frequency_grid(band_lo, band_hi, n_freq);
  std::vector<double> vals(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const Eigen::MatrixXd fx = detail::ar_rho(c_x, freqs[i]) * kx;
    const Eigen::MatrixXd fy = detail::ar_rho(c_y, freqs[i]) * ky;
    vals[i] = detail::pointwise_distance(fx, fy, kind, k);
  }
  const double raw = band_integrate(freqs, vals, band_lo, band_hi);
  return band_lo == band_hi ? raw : raw / (band_hi - band_lo);
}

// Convenience: threshold at a scenario's own boundary (baseline vs param).
// The baseline parameter is 0 in all four scenarios.
inline double population_threshold(const ScenarioSpec& spec,
                                   HypothesisKind kind, int k,
                                   double band_lo = 0.0,
                                   double band_hi = M_PI, int n_freq = 64) {
  spec.validate();
  const bool bb =
      spec.id == ScenarioId::bb_shift || spec.id == ScenarioId::bb_amplitude;
  return population_threshold(spec.id, 0.0, spec.param, kind, k, band_lo,
                              band_hi, n_freq, bb ? spec.dimension : 21);
}

// ---------------------------------------------------------------------------
// Rejection experiments.

struct ExperimentRow {
  ScenarioId id = ScenarioId::bb_shift;
  double param = 0.0;
  Eigen::Index length = 0;
  int reps = 0;
  int rejections = 0;
  double rate = 0.0;
  double std_error = 0.0;
  bool failed = false;
  std::string error;
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;
  HypothesisSpec hypothesis;
  std::uint64_t master_seed = 0;
  int reps = 0;
  double runtime_seconds = 0.0;
};

// One grid point: `reps` independent pairs, each tested at the fixed
// hypothesis. Seeds derive from (master_seed, point_index, rep), so a grid
// point's result is the same whether it runs alone or inside a sweep.
inline ExperimentRow experiment_point(const ScenarioSpec& scenario,
                                      const HypothesisSpec& hypothesis,
                                      const EstimationConfig& est, int reps,
                                      const PivotSample& pivot,
                                      std::uint64_t master_seed,
                                      std::uint64_t point_index) {
  require_config(reps >= 50, "need at least 50 replications per grid point");
  scenario.validate();
  hypothesis.validate();
  ExperimentRow row;
  row.id = scenario.id;
  row.param = scenario.param;
  row.length = scenario.length;
  row.reps = reps;
  std::vector<char> rejected(static_cast<std::size_t>(reps), 0);
  try {
    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t rep) {
      const std::uint64_t tag = (point_index << 32) | rep;
      const auto x = generate_scenario(scenario, true,
                                       derive_seed(master_seed, "exp-x", tag));
      const auto y = generate_scenario(scenario, false,
                                       derive_seed(master_seed, "exp-y", tag));
      const auto result = relevant_test(x, y, hypothesis, pivot, est);
      rejected[rep] = result.decision == Decision::reject ? 1 : 0;
    });
  } catch (const std::exception& e) {
    throw numeric_error("grid point " + to_string(scenario.id) + " param=" +
                        std::to_string(scenario.param) + " T=" +
                        std::to_string(scenario.length) + ": " + e.what());
  }
  for (char r : rejected) row.rejections += r;
  row.rate = static_cast<double>(row.rejections) / reps;
  row.std_error = std::sqrt(row.rate * (1.0 - row.rate) / reps);
  return row;
}

inline ExperimentReport rejection_experiment(
    const std::vector<ScenarioSpec>& grid, const HypothesisSpec& hypothesis,
    const EstimationConfig& est, int reps, const PivotSample& pivot,
    std::uint64_t master_seed) {
  require_config(!grid.empty(), "experiment grid must not be empty");
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.hypothesis = hypothesis;
  report.master_seed = master_seed;
  report.reps = reps;
  for (std::size_t i = 0; i < grid.size(); ++i)
    report.rows.push_back(experiment_point(grid[i], hypothesis, est, reps,
                                           pivot, master_seed, i));
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

}  // namespace fts
