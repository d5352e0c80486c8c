#pragma once

// Gaussian-RBF basis construction and ridge fitting of the continuous
// feature function V(x) = B psi(x) from a discrete feature grid.

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mca/detail/cholesky.hpp"
#include "mca/gauss2d.hpp"

namespace mca {

struct RBFBasis {
  std::vector<Gaussian2> components;
  std::size_t size() const { return components.size(); }
};

// side^2 isotropic components with means on a uniform lattice spanning
// [0,1]^2 (endpoints included; the single side=1 component sits at the
// center) and covariance var*I each.
inline RBFBasis make_grid_basis(int side, double var) {
  if (side < 1) throw std::invalid_argument("make_grid_basis: side must be >= 1");
  if (!(var > 0.0)) throw std::invalid_argument("make_grid_basis: var must be > 0");
  RBFBasis basis;
  basis.components.reserve((std::size_t)side * side);
  for (int i = 0; i < side; ++i) {
    const double u = side == 1 ? 0.5 : (double)i / (side - 1);
    for (int j = 0; j < side; ++j) {
      const double v = side == 1 ? 0.5 : (double)j / (side - 1);
      basis.components.push_back({Vec2{u, v}, Spd2(var, 0.0, var)});
    }
  }
  return basis;
}

inline std::vector<double> eval_psi(const RBFBasis& basis, Vec2 x) {
  std::vector<double> out(basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j) out[j] = pdf(basis.components[j], x);
  return out;
}

// L grid-cell centers in [0,1]^2 with a D x L feature matrix (row-major).
struct FeatureGrid {
  std::vector<Vec2> locations;
  std::size_t dim = 0;
  std::vector<double> features;  // dim x locations.size(), row-major

  std::size_t size() const { return locations.size(); }
  double at(std::size_t d, std::size_t l) const { return features[d * size() + l]; }
};

inline void validate(const FeatureGrid& grid) {
  if (grid.size() == 0 || grid.dim == 0)
    throw std::invalid_argument("FeatureGrid: empty grid");
  if (grid.features.size() != grid.dim * grid.size())
    throw std::invalid_argument("FeatureGrid: feature matrix shape mismatch");
  for (const Vec2& x : grid.locations) {
    if (!finite(x) || x.u < 0.0 || x.u > 1.0 || x.v < 0.0 || x.v > 1.0)
      throw std::invalid_argument("FeatureGrid: locations must lie in the unit square");
  }
}

// V(x) = B psi(x): an RBF basis plus the D x N coefficient matrix.
struct FeatureFunction {
  RBFBasis basis;
  std::size_t dim = 0;
  std::vector<double> coeffs;  // dim x basis.size(), row-major

  double coeff(std::size_t d, std::size_t j) const { return coeffs[d * basis.size() + j]; }
};

// Ridge regression of the coefficients: B = V Psi' (Psi Psi' + penalty I)^{-1}
// with Psi[j,l] = psi_j(x_l). The N x N primal system is solved (N << L in
// the intended configuration) via Cholesky.
inline FeatureFunction fit_ridge(const FeatureGrid& grid, const RBFBasis& basis,
                                 double penalty) {
  validate(grid);
  if (!(penalty > 0.0)) throw std::invalid_argument("fit_ridge: penalty must be > 0");
  const std::size_t n = basis.size();
  const std::size_t l = grid.size();
  const std::size_t d = grid.dim;

  std::vector<double> psi(n * l);
  for (std::size_t col = 0; col < l; ++col) {
    const std::vector<double> p = eval_psi(basis, grid.locations[col]);
    for (std::size_t j = 0; j < n; ++j) psi[j * l + col] = p[j];
  }

  // gram = Psi Psi' + penalty I
  std::vector<double> gram(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t col = 0; col < l; ++col) s += psi[i * l + col] * psi[j * l + col];
      gram[i * n + j] = s;
      gram[j * n + i] = s;
    }
    gram[i * n + i] += penalty;
  }

  // rhs = Psi V' (n x d), solved in place to X = gram^{-1} Psi V'
  std::vector<double> rhs(n * d, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t row = 0; row < d; ++row) {
      double s = 0.0;
      for (std::size_t col = 0; col < l; ++col) s += psi[j * l + col] * grid.at(row, col);
      rhs[j * d + row] = s;
    }
  detail::solve_spd(gram, n, rhs, d);

  FeatureFunction f;
  f.basis = basis;
  f.dim = d;
  f.coeffs.resize(d * n);
  for (std::size_t row = 0; row < d; ++row)
    for (std::size_t j = 0; j < n; ++j) f.coeffs[row * n + j] = rhs[j * d + row];
  return f;
}

inline std::vector<double> eval_feature(const FeatureFunction& f, Vec2 x) {
  const std::vector<double> p = eval_psi(f.basis, x);
  std::vector<double> out(f.dim, 0.0);
  for (std::size_t row = 0; row < f.dim; ++row) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) s += f.coeff(row, j) * p[j];
    out[row] = s;
  }
  return out;
}

}  // namespace mca
