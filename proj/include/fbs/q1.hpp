#pragma once

#include <array>

#include "fbs/grid.hpp"

namespace fbs {

/// Reference integrals of the multilinear (Q1) cell basis on a uniform grid:
/// m(d, e, a, b) = integral over one cell of d_d phi_a * d_e phi_b, corners
/// numbered as in Grid::cell_corners. With a cell-constant matrix A the
/// Dirichlet energy of the cell is sum_{d,e} A_de u^T m(d, e) u, which is exact
/// for the Q1 interpolant (in particular for affine u).
class Q1Element {
 public:
  explicit Q1Element(const Grid& grid);

  int dim() const { return dim_; }
  int corners() const { return corners_; }
  double m(int d, int e, int a, int b) const { return m_[((d * 3 + e) * 8 + a) * 8 + b]; }

  /// Element stiffness K_ab = sum_{d,e} abar_de m(d, e, a, b) for a symmetric
  /// cell matrix abar (row-major, dim x dim).
  void stiffness(const double* abar, std::array<double, 64>& k) const;

 private:
  int dim_;
  int corners_;
  std::array<double, 9 * 64> m_{};
};

}  // namespace fbs
