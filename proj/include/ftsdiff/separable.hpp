#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "ftsdiff/basis.hpp"
#include "ftsdiff/errors.hpp"
#include "ftsdiff/parallel.hpp"
#include "ftsdiff/spectral.hpp"

namespace fts {

// A time series of 3-D fields on a voxel grid. Row t holds the field in
// C order: voxel (i1, i2, i3) sits at index (i1*G2 + i2)*G3 + i3.
class SeparableSeries3D {
 public:
  SeparableSeries3D(Eigen::MatrixXd data, std::array<int, 3> sizes,
                    std::array<BasisSpec, 3> bases)
      : data_(std::move(data)), sizes_(sizes), bases_(std::move(bases)) {
    require_config(data_.rows() >= 2, "series needs at least 2 observations");
    long voxels = 1;
    for (int i = 0; i < 3; ++i) {
      require_config(sizes_[i] >= 2, "all axis sizes must be >= 2");
      voxels *= sizes_[i];
    }
    require_config(data_.cols() == voxels,
                   "voxel count does not match axis sizes");
    require_numeric(data_.allFinite(), "series contains non-finite values");
  }

  Eigen::Index length() const { return data_.rows(); }
  const std::array<int, 3>& sizes() const { return sizes_; }
  const BasisSpec& basis(int direction) const {
    require_config(direction >= 1 && direction <= 3, "direction must be 1..3");
    return bases_[static_cast<std::size_t>(direction - 1)];
  }
  const Eigen::MatrixXd& data() const { return data_; }

  // Field at time t reshaped so the chosen axis indexes rows and the two
  // complementary axes are flattened into columns.
  Eigen::MatrixXd unfold(Eigen::Index t, int direction) const {
    require_config(direction >= 1 && direction <= 3, "direction must be 1..3");
    const int g1 = sizes_[0], g2 = sizes_[1], g3 = sizes_[2];
    const auto row = data_.row(t);
    auto at = [&](int i1, int i2, int i3) {
      return row((static_cast<Eigen::Index>(i1) * g2 + i2) * g3 + i3);
    };
    switch (direction) {
      case 1: {
        Eigen::MatrixXd m(g1, static_cast<Eigen::Index>(g2) * g3);
        for (int i1 = 0; i1 < g1; ++i1)
          for (int i2 = 0; i2 < g2; ++i2)
            for (int i3 = 0; i3 < g3; ++i3)
              m(i1, static_cast<Eigen::Index>(i2) * g3 + i3) = at(i1, i2, i3);
        return m;
      }
      case 2: {
        Eigen::MatrixXd m(g2, static_cast<Eigen::Index>(g1) * g3);
        for (int i2 = 0; i2 < g2; ++i2)
          for (int i1 = 0; i1 < g1; ++i1)
            for (int i3 = 0; i3 < g3; ++i3)
              m(i2, static_cast<Eigen::Index>(i1) * g3 + i3) = at(i1, i2, i3);
        return m;
      }
      default: {
        Eigen::MatrixXd m(g3, static_cast<Eigen::Index>(g1) * g2);
        for (int i3 = 0; i3 < g3; ++i3)
          for (int i1 = 0; i1 < g1; ++i1)
            for (int i2 = 0; i2 < g2; ++i2)
              m(i3, static_cast<Eigen::Index>(i1) * g2 + i2) = at(i1, i2, i3);
        return m;
      }
    }
  }

 private:
  Eigen::MatrixXd data_;
  std::array<int, 3> sizes_;
  std::array<BasisSpec, 3> bases_;
};

// Removes a least-squares cubic polynomial trend from every voxel series.
inline SeparableSeries3D detrend_cubic(const SeparableSeries3D& series) {
  const Eigen::Index t = series.length();
  Eigen::MatrixXd design(t, 4);
  for (Eigen::Index r = 0; r < t; ++r) {
    const double u = t > 1 ? static_cast<double>(r) / (t - 1) : 0.0;
    design(r, 0) = 1.0;
    design(r, 1) = u;
    design(r, 2) = u * u;
    design(r, 3) = u * u * u;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  Eigen::MatrixXd resid = series.data() - design * qr.solve(series.data());
  return SeparableSeries3D(std::move(resid), series.sizes(),
                           {series.basis(1), series.basis(2),
                            series.basis(3)});
}

namespace detail {

// Basis-coordinate projector for one direction: maps grid rows to
// orthonormalized coefficients. Least squares against the design matrix,
// then the orthonormalizing change of coordinates.
inline Eigen::MatrixXd direction_projector(const BasisSpec& basis,
                                           int grid_size) {
  Eigen::VectorXd grid = basis.kind == BasisKind::raw_grid
                             ? Eigen::VectorXd()
                             : basis.default_grid(grid_size);
  if (basis.kind == BasisKind::raw_grid) {
    require_config(grid_size == basis.dimension,
                   "raw-grid basis requires grid size == dimension");
    return basis.orthonormalizer_inv;
  }
  const Eigen::MatrixXd design = basis.evaluate(grid);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < basis.dimension)
    throw numeric_error("basis not identifiable on grid");
  return basis.orthonormalizer_inv *
         qr.solve(Eigen::MatrixXd::Identity(grid_size, grid_size));
}

// Lag products of the direction-unfolded, basis-projected fields, with the
// discrete mean over the complementary axes folded in:
// S_h = (1/rest) sum_t Y_{t+h} Y_t^T, Y_t = P * unfold(t).
inline std::vector<Eigen::MatrixXd> directional_lag_products(
    const std::vector<Eigen::MatrixXd>& projected, Eigen::Index m,
    double rest_count) {
  const Eigen::Index d = projected.front().rows();
  std::vector<Eigen::MatrixXd> s(static_cast<std::size_t>(m),
                                 Eigen::MatrixXd::Zero(d, d));
  for (Eigen::Index h = 0; h < m; ++h) {
    auto& acc = s[static_cast<std::size_t>(h)];
    for (Eigen::Index t = 0; t + h < m; ++t)
      acc.noalias() += projected[static_cast<std::size_t>(t + h)] *
                       projected[static_cast<std::size_t>(t)].transpose();
    acc /= rest_count;
  }
  return s;
}

}  // namespace detail

// Sequential spectral density estimate of one direction: the empirical
// covariance is averaged over the complementary axes before the lag-window
// sum, so the output dimension is that direction's basis dimension.
inline OperatorMatrix directional_sequential_estimate(
    const SeparableSeries3D& series, int direction, double eta, double omega,
    const WindowSpec& window, double bandwidth) {
  require_config(bandwidth > 0.0 && bandwidth <= 1.0,
                 "bandwidth must lie in (0,1]");
  require_config(eta > 0.0 && eta <= 1.0, "eta must lie in (0,1]");
  const Eigen::Index m = subsample_length(eta, series.length());
  if (m < 2) throw config_error("window too short: floor(eta*T) must be >= 2");
  const auto& sizes = series.sizes();
  const int g = sizes[static_cast<std::size_t>(direction - 1)];
  const double rest =
      static_cast<double>(sizes[0]) * sizes[1] * sizes[2] / g;
  const Eigen::MatrixXd proj =
      detail::direction_projector(series.basis(direction), g);
  std::vector<Eigen::MatrixXd> projected(static_cast<std::size_t>(m));
  for (Eigen::Index t = 0; t < m; ++t)
    projected[static_cast<std::size_t>(t)] = proj * series.unfold(t, direction);
  auto s = detail::directional_lag_products(projected, m, rest);
  for (auto& mat : s) mat /= static_cast<double>(m);
  return detail::assemble_lag_window(s, omega, window, bandwidth);
}

// Per-direction surfaces of one subject; the separable spectral operator at
// (eta, omega) is the Kronecker product of the three directional estimates.
struct DirectionalSurfaces {
  std::array<SpectralEstimate, 3> dirs;
  Eigen::Index sample_length = 0;
};

inline DirectionalSurfaces separable_surfaces(
    const SeparableSeries3D& series, double band_lo, double band_hi,
    int n_freq, const std::vector<double>& fractions, const WindowSpec& window,
    const BandwidthRule& rule) {
  require_config(!fractions.empty(), "fraction grid must not be empty");
  if (subsample_length(fractions.front(), series.length()) < 2)
    throw config_error("window too short: floor(eta*T) must be >= 2");
  DirectionalSurfaces out;
  out.sample_length = series.length();
  const auto freqs = frequency_grid(band_lo, band_hi, n_freq);
  const double bandwidth = rule.bandwidth(series.length());
  const auto& sizes = series.sizes();

  for (int dir = 1; dir <= 3; ++dir) {
    auto& surf = out.dirs[static_cast<std::size_t>(dir - 1)];
    surf.freqs = freqs;
    surf.fractions = fractions;
    surf.band_lo = band_lo;
    surf.band_hi = band_hi;
    surf.sample_length = series.length();
    surf.bandwidth = bandwidth;
    surf.window = window.kind;
    surf.ops.resize(fractions.size());

    const int g = sizes[static_cast<std::size_t>(dir - 1)];
    const double rest =
        static_cast<double>(sizes[0]) * sizes[1] * sizes[2] / g;
    const Eigen::MatrixXd proj =
        detail::direction_projector(series.basis(dir), g);
    std::vector<Eigen::MatrixXd> projected(
        static_cast<std::size_t>(series.length()));
    for (Eigen::Index t = 0; t < series.length(); ++t)
      projected[static_cast<std::size_t>(t)] = proj * series.unfold(t, dir);

    parallel_for(fractions.size(), [&](std::size_t fi) {
      const Eigen::Index m =
          subsample_length(fractions[fi], series.length());
      auto s = detail::directional_lag_products(projected, m, rest);
      for (auto& mat : s) mat /= static_cast<double>(m);
      auto& row = surf.ops[fi];
      row.reserve(freqs.size());
      for (double omega : freqs)
        row.push_back(detail::assemble_lag_window(s, omega, window, bandwidth));
    });
  }
  return out;
}

}  // namespace fts
