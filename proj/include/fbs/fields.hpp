#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fbs/grid.hpp"

namespace fbs {

/// Node-sampled real field. Values are checked finite at construction.
class ScalarField {
 public:
  ScalarField(Grid grid, std::vector<double> values);
  static ScalarField constant(const Grid& grid, double c);

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  double min() const;
  double max() const;
  /// Max over boundary nodes of |value|.
  double boundary_sup() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Symmetric n x n matrix per node stored densely (row-major, n*n entries per
/// node), so that asymmetric input survives until validation reports it.
class CoefficientField {
 public:
  CoefficientField(Grid grid, std::vector<double> entries, double mu);

  static CoefficientField identity(const Grid& grid, double mu = 1.0);

  const Grid& grid() const { return grid_; }
  double mu() const { return mu_; }
  int dim() const { return grid_.dim(); }
  double entry(std::size_t node, int r, int c) const {
    const int n = grid_.dim();
    return entries_[node * n * n + r * n + c];
  }
  const std::vector<double>& entries() const { return entries_; }

 private:
  Grid grid_;
  std::vector<double> entries_;
  double mu_;
};

struct CoefficientDiagnostics {
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  double max_eigenvalue = -std::numeric_limits<double>::infinity();
  double symmetry_defect = 0.0;
  bool passed = false;
  std::size_t witness_node = 0;
  double witness_value = 0.0;
  std::string message;
};

/// Extreme eigenvalues over all nodes and the largest |A - A^T| entry; passes
/// iff the matrices are exactly symmetric with spectra in [mu, 1/mu].
CoefficientDiagnostics validate_coefficient(const CoefficientField& a);

/// Throws fbs::Error with the validation message unless `a` passes.
void require_admissible(const CoefficientField& a);

/// gamma(x) in [0, gamma_star]; gamma_star must stay below 2n/(n-2) when n >= 3.
class ExponentField {
 public:
  ExponentField(Grid grid, std::vector<double> values, double gamma_star);

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double gamma_star() const { return gamma_star_; }

 private:
  Grid grid_;
  std::vector<double> values_;
  double gamma_star_;
};

/// Critical Sobolev exponent 2n/(n-2), or +inf for n <= 2.
double sobolev_cap(int dim);

/// lambda(x) in [0, lambda_cap].
class ForcingField {
 public:
  ForcingField(Grid grid, std::vector<double> values, double lambda_cap);

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double cap() const { return cap_; }
  double sup() const;

 private:
  Grid grid_;
  std::vector<double> values_;
  double cap_;
};

void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace fbs
