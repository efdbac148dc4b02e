#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbs/fields.hpp"
#include "fbs/kernels.hpp"

namespace fbs {

/// Flux-form (2n+1)-point stencil of -div(A grad .). The face coefficient
/// between nodes i and i + e_d is the harmonic mean of A_dd at the two nodes,
/// so every off-diagonal entry is strictly negative (checked here).
/// Off-diagonal entries of A do not enter.
kernels::FluxStencil build_flux_stencil(const CoefficientField& a, std::vector<unsigned char> active);

struct ReplacementOptions {
  /// Stop once max_i |r_i| / L_ii <= tol (r = residual of the interior equations).
  double tol = 1e-10;
  int max_iterations = 0;  // 0: 20 * unknowns + 100
  bool jacobi = false;
  /// Use the OpenMP kernels; the serial ones otherwise. Results are identical.
  bool parallel = true;
};

struct ReplacementResult {
  ScalarField h;
  double residual = 0.0;
  int iterations = 0;
  bool stagnated = false;
  std::size_t unknowns = 0;
  /// Range of the Dirichlet data on the ball and of h over the ball.
  double data_min = 0.0, data_max = 0.0;
  double h_min = 0.0, h_max = 0.0;
  /// max(data_min - h_min, h_max - data_max, 0)
  double max_principle_violation = 0.0;

  nlohmann::json metadata() const;
};

/// Nodes of the ball whose axis neighbours all lie in the ball (and which are
/// not on the grid boundary) are unknowns; every other node keeps the value of u.
std::vector<unsigned char> replacement_unknowns(const Grid& grid, const Ball& ball);

ReplacementResult harmonic_replacement(const ScalarField& u, const CoefficientField& a, const Ball& ball,
                                       const ReplacementOptions& opts = {});

/// Mean of |u - h|^2 over the nodes of the ball.
double replacement_deficit(const ScalarField& u, const ScalarField& h, const Ball& ball);

struct HarnackQuotient {
  double sup = 0.0;
  double inf = 0.0;
  double at_point = 0.0;
  double sup_ratio = 0.0;  // sup / h(eval_point)
  double quotient = 0.0;   // sup / inf
};

/// Ratios over the nodes of `inner`; h(eval_point) by multilinear interpolation.
HarnackQuotient harnack_quotient(const ScalarField& h, const Ball& inner, const Point& eval_point);

struct SubharmonicResidual {
  double min_value = 0.0;  // min over grid-interior nodes of div(A grad u)
  std::size_t witness = 0;
  Point witness_point{0, 0, 0};
};

SubharmonicResidual subharmonic_residual(const ScalarField& u, const CoefficientField& a);

}  // namespace fbs
