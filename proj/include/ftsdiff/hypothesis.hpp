#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ftsdiff/eigen_analysis.hpp"
#include "ftsdiff/errors.hpp"
#include "ftsdiff/pivot.hpp"
#include "ftsdiff/separable.hpp"
#include "ftsdiff/series.hpp"
#include "ftsdiff/spectral.hpp"
#include "ftsdiff/window.hpp"

namespace fts {

enum class HypothesisKind { operator_norm, eigenprojector, eigenvalue };
enum class DependenceMode { independent, dependent };
enum class Decision { accept, reject };

inline std::string to_string(HypothesisKind k) {
  switch (k) {
    case HypothesisKind::operator_norm: return "operator";
    case HypothesisKind::eigenprojector: return "projector";
    case HypothesisKind::eigenvalue: return "eigenvalue";
  }
  return "?";
}

inline std::string to_string(Decision d) {
  return d == Decision::reject ? "reject" : "accept";
}

// What to test: which distance, which component, how large a difference is
// still irrelevant (threshold), over which frequency band, at which level.
// Thresholds are in band-averaged units: the tested distance is
// (1/(b-a)) * integral over [a,b] (the point value when a = b), so a
// threshold keeps its meaning across band choices.
struct HypothesisSpec {
  HypothesisKind kind = HypothesisKind::operator_norm;
  int component = 1;  // k; ignored for operator kind
  double threshold = 0.0;
  double band_lo = 0.0;
  double band_hi = M_PI;
  double alpha = 0.05;
  int nu_n = 20;
  DependenceMode dependence = DependenceMode::independent;

  void validate() const {
    require_config(component >= 1, "component index must be >= 1");
    require_config(threshold >= 0.0, "threshold must be >= 0");
    require_config(band_lo >= 0.0 && band_hi <= M_PI + 1e-12 &&
                       band_lo <= band_hi,
                   "band must satisfy 0 <= a <= b <= pi");
    require_config(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    require_config(nu_n >= 3, "nu_n must be >= 3");
  }

  std::vector<double> fraction_grid() const {
    std::vector<double> etas;
    etas.reserve(static_cast<std::size_t>(nu_n));
    for (int i = 1; i < nu_n; ++i)
      etas.push_back(static_cast<double>(i) / nu_n);
    etas.push_back(1.0);
    return etas;
  }
};

struct EstimationConfig {
  WindowSpec window = WindowSpec::daniell();
  BandwidthRule bandwidth = BandwidthRule::power_law();
  int n_freq = 64;
};

// Raw trapezoidal quadrature of grid values over [a, b]; a degenerate band
// a = b returns the point value. Band endpoints must be grid nodes.
inline double band_integrate(const std::vector<double>& freqs,
                             const std::vector<double>& values, double a,
                             double b) {
  require_config(freqs.size() == values.size() && !freqs.empty(),
                 "band_integrate: grid/value size mismatch");
  require_config(a <= b, "band_integrate: need a <= b");
  const double tol = 1e-12;
  auto find_node = [&](double x) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < freqs.size(); ++i)
      if (std::abs(freqs[i] - x) <= tol * (1.0 + std::abs(x)))
        return static_cast<std::ptrdiff_t>(i);
    return -1;
  };
  const std::ptrdiff_t ia = find_node(a), ib = find_node(b);
  if (ia < 0 || ib < 0) throw config_error("band not covered by grid");
  if (ia == ib) return values[static_cast<std::size_t>(ia)];
  double acc = 0.0;
  for (std::ptrdiff_t i = ia; i < ib; ++i) {
    const auto u = static_cast<std::size_t>(i);
    acc += 0.5 * (values[u] + values[u + 1]) * (freqs[u + 1] - freqs[u]);
  }
  return acc;
}

// Squared pointwise distances eta^2 * d^2(eta, omega) on the full
// (fraction, frequency) grid, for one hypothesis kind.
struct DistanceCurve {
  HypothesisKind kind = HypothesisKind::operator_norm;
  int nu_n = 20;
  std::vector<double> fractions;  // {i/n : i=1..n-1} + {1}
  std::vector<double> freqs;
  std::vector<std::vector<double>> values;  // [fraction][freq]
  double band_lo = 0.0;
  double band_hi = M_PI;
  std::vector<std::string> warnings;

  // Band-averaged distance at one fraction: integral / width, or the point
  // value on a degenerate band. Same units for any band.
  double band_value(std::size_t fraction_idx) const {
    const double raw = band_integrate(freqs, values[fraction_idx], band_lo,
                                      band_hi);
    return band_lo == band_hi ? raw : raw / (band_hi - band_lo);
  }

  double full_sample_value() const { return band_value(values.size() - 1); }
};

namespace detail {

inline void check_fraction_grid(const std::vector<double>& fractions,
                                int nu_n) {
  require_config(static_cast<int>(fractions.size()) == nu_n,
                 "fraction grid must be {i/n} plus 1");
  for (int i = 1; i < nu_n; ++i)
    require_config(
        std::abs(fractions[static_cast<std::size_t>(i - 1)] -
                 static_cast<double>(i) / nu_n) < 1e-12,
        "fraction grid must be {i/n} plus 1");
  require_config(std::abs(fractions.back() - 1.0) < 1e-12,
                 "fraction grid must end at 1");
}

inline void check_shared_grid(const SpectralEstimate& sx,
                              const SpectralEstimate& sy) {
  require_config(sx.freqs == sy.freqs && sx.fractions == sy.fractions,
                 "surfaces must share identical (eta, omega) grids");
}

// Eigen systems of one surface, component k with one spare for the gap
// diagnostic; cached per (fraction, frequency).
struct SurfaceEigens {
  std::vector<std::vector<EigenSystem>> systems;
  int gap_warnings = 0;

  static SurfaceEigens compute(const SpectralEstimate& s, int k,
                               double gap_tol) {
    SurfaceEigens out;
    const auto d = s.ops.front().front().dim();
    const int want = std::min<int>(k + 1, static_cast<int>(d));
    out.systems.resize(s.ops.size());
    for (std::size_t fi = 0; fi < s.ops.size(); ++fi) {
      auto& row = out.systems[fi];
      row.reserve(s.freqs.size());
      for (std::size_t wi = 0; wi < s.freqs.size(); ++wi)
        row.push_back(eigensystem(s.ops[fi][wi], want));
    }
    if (want > k) {
      // Gaps are diagnosed on the full-sample estimates only.
      for (const auto& sys : out.systems.back())
        if (!eigengap_diagnostic(sys, k, gap_tol).ok) ++out.gap_warnings;
    }
    return out;
  }
};

}  // namespace detail

inline DistanceCurve distance_curve(const SpectralEstimate& sx,
                                    const SpectralEstimate& sy,
                                    const HypothesisSpec& spec,
                                    double gap_tol = 0.01) {
  spec.validate();
  detail::check_shared_grid(sx, sy);
  detail::check_fraction_grid(sx.fractions, spec.nu_n);
  require_config(sx.ops.front().front().dim() ==
                     sy.ops.front().front().dim(),
                 "surfaces must share dimension");
  DistanceCurve curve;
  curve.kind = spec.kind;
  curve.nu_n = spec.nu_n;
  curve.fractions = sx.fractions;
  curve.freqs = sx.freqs;
  curve.band_lo = spec.band_lo;
  curve.band_hi = spec.band_hi;
  curve.values.assign(curve.fractions.size(),
                      std::vector<double>(curve.freqs.size(), 0.0));

  const int k = spec.component;
  if (spec.kind == HypothesisKind::operator_norm) {
    for (std::size_t fi = 0; fi < curve.fractions.size(); ++fi) {
      const double eta2 = curve.fractions[fi] * curve.fractions[fi];
      for (std::size_t wi = 0; wi < curve.freqs.size(); ++wi)
        curve.values[fi][wi] =
            eta2 * (sx.ops[fi][wi].entries - sy.ops[fi][wi].entries)
                       .squaredNorm();
    }
    return curve;
  }

  const auto d = sx.ops.front().front().dim();
  require_config(k <= d, "component index exceeds operator dimension");
  const auto ex = detail::SurfaceEigens::compute(sx, k, gap_tol);
  const auto ey = detail::SurfaceEigens::compute(sy, k, gap_tol);
  if (ex.gap_warnings > 0)
    curve.warnings.push_back(
        "first sample: eigengap below tolerance at " +
        std::to_string(ex.gap_warnings) + " of " +
        std::to_string(curve.freqs.size()) + " frequencies");
  if (ey.gap_warnings > 0)
    curve.warnings.push_back(
        "second sample: eigengap below tolerance at " +
        std::to_string(ey.gap_warnings) + " of " +
        std::to_string(curve.freqs.size()) + " frequencies");

  for (std::size_t fi = 0; fi < curve.fractions.size(); ++fi) {
    const double eta2 = curve.fractions[fi] * curve.fractions[fi];
    for (std::size_t wi = 0; wi < curve.freqs.size(); ++wi) {
      const auto& sysx = ex.systems[fi][wi];
      const auto& sysy = ey.systems[fi][wi];
      double v;
      if (spec.kind == HypothesisKind::eigenprojector) {
        v = projector_distance_sq(sysx, sysy, k);
      } else {
        const double diff =
            sysx.eigenvalues[k - 1] - sysy.eigenvalues[k - 1];
        v = diff * diff;
      }
      curve.values[fi][wi] = eta2 * v;
    }
  }
  return curve;
}

// Self-normalizer: root mean square of B(eta_i) - eta_i^2 B(1) over the
// interior fractions, B(eta) the band value of the curve at eta.
inline double self_normalizer(const DistanceCurve& curve) {
  const int n = curve.nu_n;
  detail::check_fraction_grid(curve.fractions, n);
  const double b1 = curve.full_sample_value();
  double acc = 0.0;
  for (int i = 1; i < n; ++i) {
    const double eta = static_cast<double>(i) / n;
    const double diff =
        curve.band_value(static_cast<std::size_t>(i - 1)) - eta * eta * b1;
    acc += diff * diff;
  }
  return std::sqrt(acc / (n - 1));
}

struct TestResult {
  double statistic = 0.0;       // (distance - threshold) / self_norm
  double distance = 0.0;        // band-averaged squared distance at eta = 1
  double distance_integral = 0.0;  // raw integral over the band
  double self_norm = 0.0;
  double threshold = 0.0;
  double quantile = 0.0;        // q_{1-alpha} of the pivot law
  double p_value = 1.0;
  double alpha = 0.05;
  Decision decision = Decision::accept;
  bool degenerate = false;
  HypothesisKind kind = HypothesisKind::operator_norm;
  int component = 1;
  double band_lo = 0.0, band_hi = M_PI;
  int nu_n = 20;
  Eigen::Index length_x = 0, length_y = 0;
  double bandwidth_x = 0.0, bandwidth_y = 0.0;
  std::uint64_t pivot_seed = 0;
  long pivot_paths = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline TestResult finalize_test(const DistanceCurve& curve,
                                const HypothesisSpec& spec,
                                const PivotSample& pivot) {
  require_config(pivot.nu_n == spec.nu_n,
                 "pivot sample was built with a different nu_n");
  TestResult r;
  r.kind = spec.kind;
  r.component = spec.component;
  r.band_lo = spec.band_lo;
  r.band_hi = spec.band_hi;
  r.nu_n = spec.nu_n;
  r.alpha = spec.alpha;
  r.threshold = spec.threshold;
  r.distance = curve.full_sample_value();
  r.distance_integral =
      spec.band_lo == spec.band_hi
          ? r.distance
          : r.distance * (spec.band_hi - spec.band_lo);
  r.self_norm = self_normalizer(curve);
  r.quantile = quantile(pivot, 1.0 - spec.alpha);
  r.pivot_seed = pivot.seed;
  r.pivot_paths = pivot.n_paths;
  r.warnings = curve.warnings;
  const double excess = r.distance - spec.threshold;
  if (r.self_norm == 0.0) {
    r.degenerate = true;
    if (excess > 0.0) {
      r.statistic = std::numeric_limits<double>::infinity();
      r.decision = Decision::reject;
      r.p_value = 0.0;
    } else {
      r.statistic = -std::numeric_limits<double>::infinity();
      r.decision = Decision::accept;
      r.p_value = 1.0;
    }
    return r;
  }
  r.statistic = excess / r.self_norm;
  r.decision =
      r.statistic > r.quantile ? Decision::reject : Decision::accept;
  r.p_value = pivot_p_value(pivot, r.statistic);
  return r;
}

}  // namespace detail

// The relevant-difference test: estimates both sequential surfaces, forms
// the self-normalized pivotal statistic and compares it against the
// simulated pivot quantile.
inline TestResult relevant_test(const FunctionalSeries& x,
                                const FunctionalSeries& y,
                                const HypothesisSpec& spec,
                                const PivotSample& pivot,
                                const EstimationConfig& est = {}) {
  spec.validate();
  require_config(x.dimension() == y.dimension(),
                 "samples must share basis dimension");
  if (spec.dependence == DependenceMode::dependent) {
    require_config(x.length() == y.length(),
                   "dependent mode requires equal sample lengths T1 = T2 "
                   "(and matching bandwidths)");
  }
  const auto fractions = spec.fraction_grid();
  if (subsample_length(fractions.front(), std::min(x.length(), y.length())) <
      2)
    throw config_error(
        "window too short: floor(T/nu_n) must be >= 2; increase T or lower "
        "nu_n");
  const auto sx = spectral_surface(x, spec.band_lo, spec.band_hi, est.n_freq,
                                   fractions, est.window, est.bandwidth);
  const auto sy = spectral_surface(y, spec.band_lo, spec.band_hi, est.n_freq,
                                   fractions, est.window, est.bandwidth);
  const auto curve = distance_curve(sx, sy, spec);
  TestResult r = detail::finalize_test(curve, spec, pivot);
  r.length_x = x.length();
  r.length_y = y.length();
  r.bandwidth_x = sx.bandwidth;
  r.bandwidth_y = sy.bandwidth;
  return r;
}

// Separable variant: the spectral operator of each subject is the Kronecker
// product of its three directional estimates, so Hilbert-Schmidt geometry
// factorizes and the full tensor is never formed.
inline DistanceCurve separable_distance_curve(const DirectionalSurfaces& x,
                                              const DirectionalSurfaces& y,
                                              const HypothesisSpec& spec,
                                              double gap_tol = 0.01) {
  spec.validate();
  for (int i = 0; i < 3; ++i) {
    detail::check_shared_grid(x.dirs[static_cast<std::size_t>(i)],
                              y.dirs[static_cast<std::size_t>(i)]);
    require_config(x.dirs[static_cast<std::size_t>(i)]
                           .ops.front()
                           .front()
                           .dim() == y.dirs[static_cast<std::size_t>(i)]
                                         .ops.front()
                                         .front()
                                         .dim(),
                   "directional surfaces must share dimension");
  }
  const auto& ref = x.dirs[0];
  detail::check_fraction_grid(ref.fractions, spec.nu_n);
  DistanceCurve curve;
  curve.kind = spec.kind;
  curve.nu_n = spec.nu_n;
  curve.fractions = ref.fractions;
  curve.freqs = ref.freqs;
  curve.band_lo = spec.band_lo;
  curve.band_hi = spec.band_hi;
  curve.values.assign(curve.fractions.size(),
                      std::vector<double>(curve.freqs.size(), 0.0));

  const int k = spec.component;
  for (std::size_t fi = 0; fi < curve.fractions.size(); ++fi) {
    const double eta2 = curve.fractions[fi] * curve.fractions[fi];
    for (std::size_t wi = 0; wi < curve.freqs.size(); ++wi) {
      std::array<const OperatorMatrix*, 3> ax{}, ay{};
      for (int i = 0; i < 3; ++i) {
        ax[static_cast<std::size_t>(i)] =
            &x.dirs[static_cast<std::size_t>(i)].ops[fi][wi];
        ay[static_cast<std::size_t>(i)] =
            &y.dirs[static_cast<std::size_t>(i)].ops[fi][wi];
      }
      double v = 0.0;
      if (spec.kind == HypothesisKind::operator_norm) {
        // ||A1 (x) A2 (x) A3 - B1 (x) B2 (x) B3||^2 via factorized inner
        // products.
        double nx = 1.0, ny = 1.0;
        std::complex<double> cross(1.0, 0.0);
        for (int i = 0; i < 3; ++i) {
          const auto& a = *ax[static_cast<std::size_t>(i)];
          const auto& b = *ay[static_cast<std::size_t>(i)];
          nx *= hs_norm_sq(a);
          ny *= hs_norm_sq(b);
          cross *= hs_inner(a, b);
        }
        v = nx + ny - 2.0 * cross.real();
      } else {
        // k-th eigenpair of the product system from the directional ones.
        std::array<EigenSystem, 3> ex, ey;
        for (int i = 0; i < 3; ++i) {
          const auto& a = *ax[static_cast<std::size_t>(i)];
          const auto& b = *ay[static_cast<std::size_t>(i)];
          ex[static_cast<std::size_t>(i)] =
              eigensystem(a, static_cast<int>(a.dim()));
          ey[static_cast<std::size_t>(i)] =
              eigensystem(b, static_cast<int>(b.dim()));
        }
        const auto kx = kronecker_eigensystem(ex[0], ex[1], ex[2], k);
        const auto ky = kronecker_eigensystem(ey[0], ey[1], ey[2], k);
        if (spec.kind == HypothesisKind::eigenvalue) {
          const double diff = kx.values[static_cast<std::size_t>(k - 1)] -
                              ky.values[static_cast<std::size_t>(k - 1)];
          v = diff * diff;
        } else {
          // |<phi_X, phi_Y>|^2 factorizes over directions.
          double prod = 1.0;
          for (int i = 0; i < 3; ++i) {
            const auto jx =
                kx.triples[static_cast<std::size_t>(k - 1)]
                          [static_cast<std::size_t>(i)];
            const auto jy =
                ky.triples[static_cast<std::size_t>(k - 1)]
                          [static_cast<std::size_t>(i)];
            const std::complex<double> ip =
                ex[static_cast<std::size_t>(i)].vectors.col(jx - 1).dot(
                    ey[static_cast<std::size_t>(i)].vectors.col(jy - 1));
            prod *= std::norm(ip);
          }
          v = std::clamp(2.0 - 2.0 * prod, 0.0, 2.0);
        }
      }
      curve.values[fi][wi] = eta2 * v;
    }
  }
  if (spec.kind != HypothesisKind::operator_norm) {
    // Gap diagnostic on the merged full-sample eigenvalues.
    int warn = 0;
    const std::size_t last = curve.fractions.size() - 1;
    for (std::size_t wi = 0; wi < curve.freqs.size(); ++wi) {
      for (const auto* surfs : {&x, &y}) {
        std::array<EigenSystem, 3> es;
        for (int i = 0; i < 3; ++i) {
          const auto& op = surfs->dirs[static_cast<std::size_t>(i)]
                               .ops[last][wi];
          es[static_cast<std::size_t>(i)] =
              eigensystem(op, static_cast<int>(op.dim()));
        }
        const auto merged = kronecker_eigensystem(es[0], es[1], es[2], k + 1);
        const double top = merged.values.front();
        const double gap =
            merged.values[static_cast<std::size_t>(k - 1)] -
            merged.values[static_cast<std::size_t>(k)];
        if (!(top > 0.0) || gap <= gap_tol * top) ++warn;
      }
    }
    if (warn > 0)
      curve.warnings.push_back("separable eigengap below tolerance in " +
                               std::to_string(warn) + " cases");
  }
  return curve;
}

inline TestResult relevant_test_separable(const DirectionalSurfaces& x,
                                          const DirectionalSurfaces& y,
                                          const HypothesisSpec& spec,
                                          const PivotSample& pivot) {
  const auto curve = separable_distance_curve(x, y, spec);
  TestResult r = detail::finalize_test(curve, spec, pivot);
  r.length_x = x.sample_length;
  r.length_y = y.sample_length;
  r.bandwidth_x = x.dirs[0].bandwidth;
  r.bandwidth_y = y.dirs[0].bandwidth;
  return r;
}

}  // namespace fts
