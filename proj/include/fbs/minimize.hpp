#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <json.hpp>

#include "fbs/energy.hpp"
#include "fbs/fields.hpp"

namespace fbs {

struct MinimizeOptions {
  int max_sweeps = 100000;
  /// Relative energy decrease per sweep below which a sweep counts as quiet.
  double tol_energy = 1e-12;
  /// Largest node update for a sweep to count as quiet; also the scalar solve tolerance.
  double tol_node = 1e-12;
  /// Consecutive quiet sweeps required to stop.
  int patience = 3;
  std::uint64_t seed = 0;
  /// Shuffle the node order every sweep (seeded); lexicographic otherwise.
  bool shuffle = false;
  /// Restrict node values to [0, sup of |phi| on the boundary].
  bool clamp = true;
  /// Number of starts; start 0 begins from phi, the others from seeded random interiors.
  int starts = 1;
  /// Over-relaxation factor in [1, 2); 1 is plain nonlinear Gauss-Seidel.
  double relaxation = 1.0;

  void validate() const;
  nlohmann::json to_json() const;
  static MinimizeOptions from_json(const nlohmann::json& j, const std::string& path = "solver");
};

struct StartSummary {
  int start = 0;
  double energy = 0.0;
  int sweeps = 0;
  bool converged = false;
};

struct MinimizeReport {
  int sweeps_used = 0;
  double initial_energy = 0.0;
  /// Energy after each sweep, tracked as the initial energy minus the exact
  /// per-node decreases; non-increasing by construction.
  std::vector<double> energy_trace;
  /// Largest |tracked - recomputed| energy over all sweeps.
  double trace_drift = 0.0;
  double final_delta = 0.0;
  double max_update = 0.0;
  std::size_t clamped_nodes = 0;
  bool converged = false;
  EnergyBreakdown final_energy;
  int best_start = 0;
  std::vector<StartSummary> starts;
  /// Two starts ended at different fields with energies within 1e-9 relative.
  bool near_equal_distinct = false;

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

struct MinimizeResult {
  ScalarField u;
  MinimizeReport report;
};

/// One-node objective q(t) = a t^2 - b t + lam w t^gamma [t > 0].
double node_objective(double t, double a, double b, double w, double lam, double gam);

/// q(t1) - q(t0), evaluated without cancelling the two quadratic parts.
double node_objective_change(double t1, double t0, double a, double b, double w, double lam, double gam);

/// Global minimiser of q over [0, upper]; exact ties go to t = 0.
double node_solve(double a, double b, double w, double lam, double gam,
                  double upper = std::numeric_limits<double>::infinity());

/// Nonlinear Gauss-Seidel (optionally over-relaxed) on interior nodes with the
/// boundary held at phi. Multiple starts run concurrently; the lowest energy wins.
MinimizeResult minimize(const ScalarField& phi, const CoefficientField& a, const ForcingField& lam,
                        const ExponentField& gam, const MinimizeOptions& opts = {});

struct CompetitorReport {
  int count = 0;
  /// min over competitors v of energy(v) - energy(u)
  double worst_margin = 0.0;
  int violations = 0;  // competitors with energy(v) < energy(u) - tol
  double tol = 0.0;
};

/// Energies of `count` competitors v = u + (seeded random smooth bump) sharing
/// the boundary values of u, compared against energy(u). Bump amplitudes span
/// four decades below max(|u|_inf, 1e-3).
CompetitorReport sample_competitors(const ScalarField& u, const CoefficientField& a, const ForcingField& lam,
                                    const ExponentField& gam, int count, std::uint64_t seed, double tol = 1e-10);

/// Assembled Q1 stiffness as a 3^n-point stencil per node: entry
/// [i * 3^n + o] couples node i to its neighbour at offset o (base-3 digits,
/// digit 1 = no shift; first axis is the least significant digit).
std::vector<double> assemble_stiffness(const CoefficientField& a);

/// Lumped node quadrature weights (cell volume / 2^n summed over adjacent cells).
std::vector<double> node_weights(const Grid& grid);

}  // namespace fbs
