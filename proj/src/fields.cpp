#include "fbs/fields.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "fbs/error.hpp"

namespace fbs {

namespace {

void require_size(const Grid& grid, std::size_t got, std::size_t per_node, const char* what) {
  if (got != grid.size() * per_node) {
    std::ostringstream os;
    os << what << ": expected " << grid.size() * per_node << " values, got " << got;
    throw Error(os.str());
  }
}

void require_finite(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << what << ": non-finite value at entry " << i;
      throw Error(os.str());
    }
}

}  // namespace

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (a != b) throw Error(std::string("grid mismatch: ") + what);
}

ScalarField::ScalarField(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  require_size(grid_, values_.size(), 1, "scalar field");
  require_finite(values_, "scalar field");
}

ScalarField ScalarField::constant(const Grid& grid, double c) { return ScalarField(grid, std::vector<double>(grid.size(), c)); }

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::boundary_sup() const {
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (grid_.on_boundary(i)) s = std::max(s, std::abs(values_[i]));
  return s;
}

CoefficientField::CoefficientField(Grid grid, std::vector<double> entries, double mu)
    : grid_(std::move(grid)), entries_(std::move(entries)), mu_(mu) {
  const auto n = static_cast<std::size_t>(grid_.dim());
  require_size(grid_, entries_.size(), n * n, "coefficient field");
  require_finite(entries_, "coefficient field");
  if (!(mu > 0.0 && mu <= 1.0)) throw Error("ellipticity constant mu must lie in (0, 1]");
}

CoefficientField CoefficientField::identity(const Grid& grid, double mu) {
  const int n = grid.dim();
  std::vector<double> e(grid.size() * n * n, 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (int d = 0; d < n; ++d) e[i * n * n + d * n + d] = 1.0;
  return CoefficientField(grid, std::move(e), mu);
}

CoefficientDiagnostics validate_coefficient(const CoefficientField& a) {
  CoefficientDiagnostics diag;
  const int n = a.dim();
  const double lo = a.mu();
  const double hi = 1.0 / a.mu();
  bool asym_found = false;
  bool window_found = false;
  std::size_t asym_node = 0;

  for (std::size_t i = 0; i < a.grid().size(); ++i) {
    double defect = 0.0;
    bool diagonal = true;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        if (r != c && a.entry(i, r, c) != 0.0) diagonal = false;
        defect = std::max(defect, std::abs(a.entry(i, r, c) - a.entry(i, c, r)));
      }
    if (defect > diag.symmetry_defect) diag.symmetry_defect = defect;
    if (defect > 0.0 && !asym_found) {
      asym_found = true;
      asym_node = i;
    }

    double emin, emax;
    if (diagonal) {
      emin = emax = a.entry(i, 0, 0);
      for (int d = 1; d < n; ++d) {
        emin = std::min(emin, a.entry(i, d, d));
        emax = std::max(emax, a.entry(i, d, d));
      }
    } else {
      Eigen::MatrixXd m(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) m(r, c) = 0.5 * (a.entry(i, r, c) + a.entry(i, c, r));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
      emin = es.eigenvalues().minCoeff();
      emax = es.eigenvalues().maxCoeff();
    }
    diag.min_eigenvalue = std::min(diag.min_eigenvalue, emin);
    diag.max_eigenvalue = std::max(diag.max_eigenvalue, emax);
    if (!window_found && (emin < lo || emax > hi)) {
      window_found = true;
      diag.witness_node = i;
      diag.witness_value = emin < lo ? emin : emax;
    }
  }

  std::ostringstream os;
  if (asym_found) {
    diag.witness_node = asym_node;
    diag.witness_value = diag.symmetry_defect;
    os << "coefficient matrix not symmetric at node " << asym_node << " (defect " << diag.symmetry_defect << ")";
  } else if (window_found) {
    os << "eigenvalue " << diag.witness_value << " at node " << diag.witness_node << " outside [" << lo << ", " << hi
       << "]";
  }
  diag.passed = !asym_found && !window_found;
  diag.message = os.str();
  return diag;
}

void require_admissible(const CoefficientField& a) {
  const auto d = validate_coefficient(a);
  if (!d.passed) throw Error(d.message);
}

double sobolev_cap(int dim) {
  if (dim <= 2) return std::numeric_limits<double>::infinity();
  return 2.0 * dim / (dim - 2.0);
}

ExponentField::ExponentField(Grid grid, std::vector<double> values, double gamma_star)
    : grid_(std::move(grid)), values_(std::move(values)), gamma_star_(gamma_star) {
  require_size(grid_, values_.size(), 1, "exponent field");
  require_finite(values_, "exponent field");
  if (!(gamma_star >= 0.0)) throw Error("gamma_star must be non-negative");
  if (!(gamma_star < sobolev_cap(grid_.dim()))) {
    std::ostringstream os;
    os << "gamma_star " << gamma_star << " must stay below the critical exponent " << sobolev_cap(grid_.dim());
    throw Error(os.str());
  }
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] < 0.0 || values_[i] > gamma_star) {
      std::ostringstream os;
      os << "exponent " << values_[i] << " at node " << i << " outside [0, " << gamma_star << "]";
      throw Error(os.str());
    }
}

ForcingField::ForcingField(Grid grid, std::vector<double> values, double lambda_cap)
    : grid_(std::move(grid)), values_(std::move(values)), cap_(lambda_cap) {
  require_size(grid_, values_.size(), 1, "forcing field");
  require_finite(values_, "forcing field");
  if (!(lambda_cap >= 0.0)) throw Error("lambda cap must be non-negative");
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] < 0.0 || values_[i] > lambda_cap) {
      std::ostringstream os;
      os << "forcing " << values_[i] << " at node " << i << " outside [0, " << lambda_cap << "]";
      throw Error(os.str());
    }
}

double ForcingField::sup() const {
  double s = 0.0;
  for (double v : values_) s = std::max(s, v);
  return s;
}

}  // namespace fbs
