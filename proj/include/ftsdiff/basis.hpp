#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ftsdiff/errors.hpp"

namespace fts {

enum class BasisKind { fourier, bspline, raw_grid };

inline std::string to_string(BasisKind k) {
  switch (k) {
    case BasisKind::fourier: return "fourier";
    case BasisKind::bspline: return "bspline";
    case BasisKind::raw_grid: return "raw-grid";
  }
  return "?";
}

// A basis of the curve space together with its Gram matrix and an
// orthonormalizing change of coordinates R (RᵀGR = I). Every downstream
// computation runs in the orthonormalized coordinates, where the
// Hilbert-Schmidt norm reduces to the Frobenius norm.
class BasisSpec {
 public:
  BasisKind kind = BasisKind::fourier;
  int dimension = 0;
  double lo = 0.0;
  double hi = 1.0;
  bool include_constant = true;  // fourier only
  Eigen::MatrixXd gram;              // d x d, symmetric positive definite
  Eigen::MatrixXd orthonormalizer;   // R with RᵀGR = I
  Eigen::MatrixXd orthonormalizer_inv;  // R⁻¹ (maps raw coords -> orthonormal)

  static BasisSpec fourier(int dimension, double lo = 0.0, double hi = 1.0,
                           bool include_constant = true) {
    require_config(dimension >= 1, "fourier basis needs dimension >= 1");
    require_config(hi > lo, "basis domain must have positive length");
    BasisSpec b;
    b.kind = BasisKind::fourier;
    b.dimension = dimension;
    b.lo = lo;
    b.hi = hi;
    b.include_constant = include_constant;
    b.gram = Eigen::MatrixXd::Identity(dimension, dimension);
    b.finalize();
    return b;
  }

  // Cubic B-splines on d-2 equispaced breakpoints (endpoints included),
  // clamped knot vector; dimension = breaks + order - 2.
  static BasisSpec bspline(int dimension, double lo = 0.0, double hi = 1.0) {
    require_config(dimension >= 4, "bspline basis needs dimension >= 4");
    require_config(hi > lo, "basis domain must have positive length");
    BasisSpec b;
    b.kind = BasisKind::bspline;
    b.dimension = dimension;
    b.lo = lo;
    b.hi = hi;
    b.build_bspline_knots();
    b.gram = b.bspline_gram();
    b.finalize();
    return b;
  }

  // The grid itself as coordinates: cell-indicator functions of width
  // (hi-lo)/d, so the inner product is the Riemann quadrature rule.
  static BasisSpec raw_grid(int grid_size, double lo = 0.0, double hi = 1.0) {
    require_config(grid_size >= 1, "raw-grid basis needs grid_size >= 1");
    require_config(hi > lo, "basis domain must have positive length");
    BasisSpec b;
    b.kind = BasisKind::raw_grid;
    b.dimension = grid_size;
    b.lo = lo;
    b.hi = hi;
    const double cell = (hi - lo) / grid_size;
    b.gram = cell * Eigen::MatrixXd::Identity(grid_size, grid_size);
    b.finalize();
    return b;
  }

  // Design matrix: basis functions evaluated at the grid points, G x d.
  Eigen::MatrixXd evaluate(const Eigen::VectorXd& grid) const {
    const auto g = static_cast<Eigen::Index>(grid.size());
    switch (kind) {
      case BasisKind::fourier: {
        Eigen::MatrixXd design(g, dimension);
        const double len = hi - lo;
        const double scale = 1.0 / std::sqrt(len);
        const double sqrt2 = std::sqrt(2.0);
        for (Eigen::Index r = 0; r < g; ++r) {
          const double u = (grid[r] - lo) / len;
          int c = 0;
          if (include_constant) design(r, c++) = scale;
          for (int j = 1; c < dimension; ++j) {
            const double arg = 2.0 * M_PI * j * u;
            design(r, c++) = scale * sqrt2 * std::sin(arg);
            if (c < dimension) design(r, c++) = scale * sqrt2 * std::cos(arg);
          }
        }
        return design;
      }
      case BasisKind::bspline: {
        Eigen::MatrixXd design(g, dimension);
        for (Eigen::Index r = 0; r < g; ++r)
          for (int c = 0; c < dimension; ++c)
            design(r, c) = bspline_value(c, grid[r]);
        return design;
      }
      case BasisKind::raw_grid: {
        require_config(g == dimension,
                       "raw-grid basis requires grid size == dimension");
        return Eigen::MatrixXd::Identity(dimension, dimension);
      }
    }
    throw config_error("unknown basis kind");
  }

  Eigen::VectorXd default_grid(int points) const {
    require_config(points >= 2, "grid needs at least 2 points");
    return Eigen::VectorXd::LinSpaced(points, lo, hi);
  }

 private:
  std::vector<double> knots_;  // bspline only
  static constexpr int kOrder = 4;

  // Cholesky-based orthonormalizer: G = LLᵀ, R = L⁻ᵀ, so RᵀGR = I.
  void finalize() {
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    require_numeric(llt.info() == Eigen::Success,
                    "basis gram matrix is not positive definite");
    Eigen::MatrixXd L = llt.matrixL();
    orthonormalizer =
        L.transpose()
            .triangularView<Eigen::Upper>()
            .solve(Eigen::MatrixXd::Identity(dimension, dimension));
    orthonormalizer_inv = L.transpose();
    const double err = (orthonormalizer.transpose() * gram * orthonormalizer -
                        Eigen::MatrixXd::Identity(dimension, dimension))
                           .cwiseAbs()
                           .maxCoeff();
    require_numeric(err <= 1e-10, "orthonormalizer residual exceeds 1e-10");
  }

  void build_bspline_knots() {
    const int breaks = dimension - 2;
    knots_.clear();
    for (int i = 0; i < kOrder - 1; ++i) knots_.push_back(lo);
    for (int i = 0; i < breaks; ++i)
      knots_.push_back(lo + (hi - lo) * i / (breaks - 1));
    for (int i = 0; i < kOrder - 1; ++i) knots_.push_back(hi);
  }

  // Cox-de Boor recursion for basis function i at point x.
  double bspline_value(int i, double x) const {
    const auto& t = knots_;
    if (x < lo || x > hi) return 0.0;
    // Right-closed top interval so the last function reaches 1 at hi.
    if (x == hi) {
      double v = bspline_value(i, hi - 1e-9 * (hi - lo));
      if (i == dimension - 1) v = 1.0;
      return v;
    }
    std::vector<double> vals(t.size() - 1, 0.0);
    for (std::size_t j = 0; j + 1 < t.size(); ++j)
      vals[j] = (t[j] <= x && x < t[j + 1]) ? 1.0 : 0.0;
    for (int k = 2; k <= kOrder; ++k) {
      for (std::size_t j = 0; j + k < t.size(); ++j) {
        double a = 0.0, b = 0.0;
        if (t[j + k - 1] > t[j]) a = (x - t[j]) / (t[j + k - 1] - t[j]) * vals[j];
        if (t[j + k] > t[j + 1])
          b = (t[j + k] - x) / (t[j + k] - t[j + 1]) * vals[j + 1];
        vals[j] = a + b;
      }
    }
    return vals[static_cast<std::size_t>(i)];
  }

  // Gauss-Legendre(4) per breakpoint interval; exact for cubic products.
  Eigen::MatrixXd bspline_gram() const {
    static const double nodes[4] = {-0.8611363115940526, -0.3399810435848563,
                                    0.3399810435848563, 0.8611363115940526};
    static const double weights[4] = {0.3478548451374538, 0.6521451548625461,
                                      0.6521451548625461, 0.3478548451374538};
    const int breaks = dimension - 2;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dimension, dimension);
    for (int s = 0; s + 1 < breaks; ++s) {
      const double a = lo + (hi - lo) * s / (breaks - 1);
      const double b = lo + (hi - lo) * (s + 1) / (breaks - 1);
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (int q = 0; q < 4; ++q) {
        const double x = mid + half * nodes[q];
        Eigen::VectorXd phi(dimension);
        for (int i = 0; i < dimension; ++i) phi[i] = bspline_value(i, x);
        g += (half * weights[q]) * phi * phi.transpose();
      }
    }
    return g;
  }
};

}  // namespace fts
