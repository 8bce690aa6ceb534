#pragma once

#include <Eigen/Dense>
#include <complex>

#include "ftsdiff/errors.hpp"

namespace fts {

// A linear operator on the curve space, as a d x d complex matrix in
// orthonormalized coordinates, tagged with the frequency it belongs to.
struct OperatorMatrix {
  Eigen::MatrixXcd entries;
  double freq = 0.0;

  Eigen::Index dim() const { return entries.rows(); }

  bool is_hermitian(double tol = 1e-10) const {
    const double resid = (entries - entries.adjoint()).norm();
    return resid <= tol * (1.0 + entries.norm());
  }

  OperatorMatrix hermitian_part() const {
    return OperatorMatrix{0.5 * (entries + entries.adjoint().eval()), freq};
  }
};

// In orthonormalized coordinates the Hilbert-Schmidt inner product is the
// entrywise one: sum_ij A_ij * conj(B_ij).
inline std::complex<double> hs_inner(const OperatorMatrix& a,
                                     const OperatorMatrix& b) {
  require_config(a.entries.rows() == b.entries.rows() &&
                     a.entries.cols() == b.entries.cols(),
                 "hs_inner dimension mismatch");
  return (a.entries.array() * b.entries.array().conjugate()).sum();
}

inline double hs_norm_sq(const OperatorMatrix& a) {
  return a.entries.squaredNorm();
}

inline double hs_norm_sq(const Eigen::MatrixXcd& a) { return a.squaredNorm(); }

}  // namespace fts
