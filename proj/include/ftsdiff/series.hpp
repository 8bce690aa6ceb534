#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "ftsdiff/basis.hpp"
#include "ftsdiff/errors.hpp"

namespace fts {

// A sample of T curves stored as coefficient rows in the orthonormalized
// coordinates of `basis`. Immutable after construction.
class FunctionalSeries {
 public:
  FunctionalSeries(Eigen::MatrixXd coeffs, BasisSpec basis,
                   bool centered = false)
      : coeffs_(std::move(coeffs)), basis_(std::move(basis)),
        centered_(centered) {
    require_config(coeffs_.rows() >= 2, "series needs at least 2 observations");
    require_config(coeffs_.cols() == basis_.dimension,
                   "coefficient width does not match basis dimension");
    require_numeric(coeffs_.allFinite(), "series contains non-finite values");
    if (centered_) {
      const Eigen::VectorXd means = coeffs_.colwise().mean();
      const double scale =
          std::max(1.0, coeffs_.cwiseAbs().maxCoeff());
      require_numeric(means.cwiseAbs().maxCoeff() <= 1e-12 * scale,
                      "series flagged centered but column means are not 0");
    }
  }

  Eigen::Index length() const { return coeffs_.rows(); }
  int dimension() const { return basis_.dimension; }
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }
  const BasisSpec& basis() const { return basis_; }
  bool centered() const { return centered_; }

 private:
  Eigen::MatrixXd coeffs_;
  BasisSpec basis_;
  bool centered_;
};

// Subtracts column means. Idempotent.
inline FunctionalSeries center(const FunctionalSeries& series) {
  Eigen::MatrixXd c = series.coeffs();
  c.rowwise() -= c.colwise().mean();
  return FunctionalSeries(std::move(c), series.basis(), true);
}

struct Projection {
  FunctionalSeries series;
  // Relative L2 reconstruction error of the least-squares fit on the grid.
  double round_trip_rel_error;
};

// Least-squares projection of grid-sampled curves onto the basis, then the
// orthonormalizing coordinate change. rows(raw) = time, cols = grid points.
inline Projection project_to_basis(const Eigen::MatrixXd& raw,
                                   const BasisSpec& basis,
                                   const Eigen::VectorXd& grid) {
  require_config(raw.cols() == grid.size(),
                 "raw sample width does not match grid size");
  require_config(grid.size() >= basis.dimension,
                 "grid must have at least as many points as basis dimension");
  const Eigen::MatrixXd design = basis.evaluate(grid);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < basis.dimension)
    throw numeric_error("basis not identifiable on grid");
  const Eigen::MatrixXd raw_coeffs = qr.solve(raw.transpose());  // d x T
  const double denom = std::max(raw.norm(), 1e-300);
  const double err = (design * raw_coeffs - raw.transpose()).norm() / denom;
  Eigen::MatrixXd ortho = (basis.orthonormalizer_inv * raw_coeffs).transpose();
  return Projection{FunctionalSeries(std::move(ortho), basis), err};
}

inline Projection project_to_basis(const Eigen::MatrixXd& raw,
                                   const BasisSpec& basis) {
  return project_to_basis(raw, basis,
                          basis.default_grid(static_cast<int>(raw.cols())));
}

// Evaluates the fitted curves back on a grid; inverse of project_to_basis
// up to the least-squares residual.
inline Eigen::MatrixXd reconstruct(const FunctionalSeries& series,
                                   const Eigen::VectorXd& grid) {
  const Eigen::MatrixXd design = series.basis().evaluate(grid);
  // raw coords a = R * orthonormal coords.
  return (design * series.basis().orthonormalizer *
          series.coeffs().transpose())
      .transpose();
}

}  // namespace fts
