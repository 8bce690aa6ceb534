#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <tuple>
#include <vector>

#include "ftsdiff/errors.hpp"
#include "ftsdiff/operator_matrix.hpp"

namespace fts {

// Top-k eigenpairs of a Hermitian operator at one frequency, eigenvalues in
// descending order. Projectors are rank one, Pi_j = v_j v_j^dagger; the
// phase of v_j is irrelevant by construction.
struct EigenSystem {
  double freq = 0.0;
  Eigen::VectorXd eigenvalues;  // descending
  Eigen::MatrixXcd vectors;     // d x k, unit columns

  int components() const { return static_cast<int>(eigenvalues.size()); }

  Eigen::MatrixXcd projector(int j) const {
    require_config(j >= 1 && j <= components(), "projector index out of range");
    const auto v = vectors.col(j - 1);
    return v * v.adjoint();
  }

  // Consecutive eigenvalue differences lambda_j - lambda_{j+1}.
  Eigen::VectorXd gaps() const {
    const int k = components();
    Eigen::VectorXd g(std::max(0, k - 1));
    for (int j = 0; j + 1 < k; ++j) g[j] = eigenvalues[j] - eigenvalues[j + 1];
    return g;
  }
};

// Eigen-solve on the Hermitianized matrix (A + A^dagger)/2; estimation noise
// breaks exact Hermitianity at machine level.
inline EigenSystem eigensystem(const OperatorMatrix& op, int k) {
  const Eigen::Index d = op.dim();
  require_config(k >= 1 && k <= d, "component count must lie in [1, d]");
  if (!op.is_hermitian()) throw numeric_error("operator not Hermitian");
  Eigen::MatrixXcd h = 0.5 * (op.entries + op.entries.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  require_numeric(solver.info() == Eigen::Success,
                  "Hermitian eigendecomposition failed");
  EigenSystem out;
  out.freq = op.freq;
  out.eigenvalues.resize(k);
  out.vectors.resize(d, k);
  for (int j = 0; j < k; ++j) {
    out.eigenvalues[j] = solver.eigenvalues()[d - 1 - j];
    out.vectors.col(j) = solver.eigenvectors().col(d - 1 - j);
  }
  return out;
}

// Squared Hilbert-Schmidt distance between the k-th eigenprojectors:
// ||Pi_X - Pi_Y||^2 = 2 - 2|<phi_X, phi_Y>|^2 for rank-one projectors.
// Rotation invariant, range [0, 2].
inline double projector_distance_sq(const EigenSystem& ex,
                                    const EigenSystem& ey, int k) {
  require_config(k >= 1 && k <= ex.components() && k <= ey.components(),
                 "component index exceeds stored components");
  require_config(ex.vectors.rows() == ey.vectors.rows(),
                 "eigen systems have mismatched dimension");
  const std::complex<double> ip =
      ex.vectors.col(k - 1).dot(ey.vectors.col(k - 1));
  const double d = 2.0 - 2.0 * std::norm(ip);
  return std::clamp(d, 0.0, 2.0);
}

struct EigengapReport {
  bool ok = true;
  double margin = 0.0;  // smallest relevant gap relative to lambda_1
  std::string message;
};

// Separation check for the k-th eigenvalue: both adjacent gaps must exceed
// tol * lambda_1. Diagnostic only; never aborts a test.
inline EigengapReport eigengap_diagnostic(const EigenSystem& e, int k,
                                          double tol = 0.01) {
  require_config(k >= 1 && k + 1 <= e.components(),
                 "eigengap diagnostic needs k+1 components");
  const double top = e.eigenvalues[0];
  double gap = e.eigenvalues[k - 1] - e.eigenvalues[k];
  if (k > 1) gap = std::min(gap, e.eigenvalues[k - 2] - e.eigenvalues[k - 1]);
  EigengapReport r;
  r.margin = top > 0.0 ? gap / top : 0.0;
  r.ok = top > 0.0 && gap > tol * top;
  if (!r.ok) {
    r.message = "eigengap below tolerance at freq " + std::to_string(e.freq) +
                " for component " + std::to_string(k);
  }
  return r;
}

// Eigenvalues of a separable (Kronecker) operator: all triple products of
// directional eigenvalues, the N largest kept with their index triples.
struct KroneckerEigenSystem {
  std::array<Eigen::VectorXd, 3> directional;  // per-direction eigenvalues
  std::vector<double> values;                  // descending
  std::vector<std::array<int, 3>> triples;     // 1-based indices (j,k,l)
};

inline KroneckerEigenSystem kronecker_eigensystem(
    const std::array<const EigenSystem*, 3>& dirs, int top_n) {
  require_config(top_n >= 1, "top_n must be positive");
  const int need = static_cast<int>(
      std::ceil(std::cbrt(static_cast<double>(top_n)) - 1e-9));
  long total = 1;
  for (const auto* e : dirs) {
    require_config(e->components() >= need,
                   "insufficient directional components for requested top_n");
    total *= e->components();
  }
  require_config(top_n <= total,
                 "top_n exceeds the number of available products");
  KroneckerEigenSystem out;
  for (int i = 0; i < 3; ++i) out.directional[i] = dirs[i]->eigenvalues;
  std::vector<std::pair<double, std::array<int, 3>>> all;
  all.reserve(static_cast<std::size_t>(total));
  for (int j = 0; j < dirs[0]->components(); ++j)
    for (int k = 0; k < dirs[1]->components(); ++k)
      for (int l = 0; l < dirs[2]->components(); ++l)
        all.push_back({dirs[0]->eigenvalues[j] * dirs[1]->eigenvalues[k] *
                           dirs[2]->eigenvalues[l],
                       {j + 1, k + 1, l + 1}});
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  out.values.reserve(static_cast<std::size_t>(top_n));
  out.triples.reserve(static_cast<std::size_t>(top_n));
  for (int i = 0; i < top_n; ++i) {
    out.values.push_back(all[static_cast<std::size_t>(i)].first);
    out.triples.push_back(all[static_cast<std::size_t>(i)].second);
  }
  return out;
}

inline KroneckerEigenSystem kronecker_eigensystem(const EigenSystem& d1,
                                                  const EigenSystem& d2,
                                                  const EigenSystem& d3,
                                                  int top_n) {
  return kronecker_eigensystem({&d1, &d2, &d3}, top_n);
}

}  // namespace fts
