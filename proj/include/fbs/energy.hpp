#pragma once

#include <optional>
#include <string>

#include "fbs/fields.hpp"

namespace fbs {

/// Discrete functional over a region: Q1 Dirichlet energy plus the
/// node-lumped term lambda u^gamma on nodes with u > 0.
struct EnergyBreakdown {
  double dirichlet = 0.0;
  double singular = 0.0;
  double total = 0.0;
  Region region;
};

/// Evaluates the discrete functional with the OpenMP kernel. Nodes with
/// u <= zero_tol do not pay the singular term.
EnergyBreakdown energy(const ScalarField& u, const CoefficientField& a, const ForcingField& lam,
                       const ExponentField& gam, const Region& region = Region::whole(), double zero_tol = 0.0);

/// Same quantity through the serial reference kernel.
EnergyBreakdown energy_serial(const ScalarField& u, const CoefficientField& a, const ForcingField& lam,
                              const ExponentField& gam, const Region& region = Region::whole(),
                              double zero_tol = 0.0);

std::string energy_csv_header();
/// "region,dirichlet,singular,total" with region "whole" or "ball(x;y;z;r)".
std::string energy_csv_row(const EnergyBreakdown& e, int dim);

struct ScaledProblem {
  ScalarField v;
  CoefficientField a;
  ForcingField lambda;
  ExponentField gamma;

  // scale_local parameters
  Point x0{0, 0, 0};
  double rho = 1.0;
  double mu_scale = 1.0;
  // rescale_growth parameters
  double r = 1.0;
  double beta = 1.0;
  double gamma_star_r = 0.0;  // inf of gamma over B_r(0)
  bool admissible = true;
  double lambda_sup = 0.0;

  /// Bound on the multilinear resampling error of v, from second differences.
  double interpolation_bound = 0.0;
};

/// v(x) = u(x0 + rho x) / mu_scale, A(x0 + rho x), gamma(x0 + rho x) and
/// lambda_s(x) = mu_scale^gamma (rho / mu_scale)^2 lambda(x0 + rho x), resampled
/// multilinearly onto `target` (defaults to the grid of u).
ScaledProblem scale_local(const ScalarField& u, const CoefficientField& a, const ForcingField& lam,
                          const ExponentField& gam, const Point& x0, double rho, double mu_scale,
                          const std::optional<Grid>& target = std::nullopt);

/// v(x) = u(r x) / r^beta with lambda_r(x) = lambda(r x) r^{gamma(r x) beta - 2(beta - 1)}.
/// admissible iff gamma_star(r) >= 2 or beta <= 2 / (2 - gamma_star(r)).
ScaledProblem rescale_growth(const ScalarField& u, const CoefficientField& a, const ForcingField& lam,
                             const ExponentField& gam, double r, double beta);

}  // namespace fbs
