#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbs/fields.hpp"
#include "fbs/minimize.hpp"
#include "fbs/modulus.hpp"

namespace fbs {

// ---- dyadic growth -------------------------------------------------------

struct DyadicEntry {
  int k = 0;
  double r = 0.0;
  double sup = 0.0;
};

struct DyadicTrace {
  Point center{0, 0, 0};
  int k_max = 0;
  std::vector<DyadicEntry> entries;  // k = 1..k_max
  bool all_zero = false;

  nlohmann::json to_json(int dim) const;
  static std::string csv_header();
  std::string csv() const;
};

/// Largest k for which 2^-k >= h, the finest resolvable dyadic radius.
int max_dyadic_level(const Grid& grid);

/// Node max of u over B_{2^-k}(x0), k = 1..k_max.
DyadicTrace dyadic_sup_trace(const ScalarField& u, const Point& x0, int k_max);

struct GrowthOptions {
  int k_min = 2;              // the coarsest ball is dropped
  double floor = 1e-11;       // entries with S_r <= floor are dropped
  double min_radius_cells = 0.0;  // entries with r < min_radius_cells * h are dropped
};

struct GrowthFit {
  double beta_hat = 0.0;
  double intercept = 0.0;  // log S_r ~ intercept + beta_hat log r, so C0 = exp(intercept)
  double r_squared = 0.0;
  double target_beta = 0.0;
  double relative_gap = 0.0;
  int window_k_min = 0;
  int window_k_max = 0;
  int used = 0;

  nlohmann::json to_json() const;
};

/// Least-squares slope of log S_r against log r. `h` is the mesh size used by
/// min_radius_cells (ignored when that option is 0).
GrowthFit fit_growth_exponent(const DyadicTrace& trace, double gamma_at_x0, const GrowthOptions& opts = {},
                              double h = 0.0);

struct RatioCheck {
  int k = 0;
  double ratio = 0.0;      // S_{2^-(k+1)} / S_{2^-k}
  double bound = 0.0;      // 2^{-beta} (1 + tolerance)
  double tolerance = 0.0;
  bool holds = false;
};

/// Successive-ratio test S_{2^-(k+1)} / S_{2^-k} <= 2^{-beta} (1 + t_k) for every
/// consecutive pair with 2^-(k+1) >= 2h and S_{2^-k} > floor. The mesh
/// allowance is t_k = (s / (s - h))^beta - 1, s = 2^-(k+1), covering a free
/// boundary displaced by up to one cell.
std::vector<RatioCheck> dyadic_ratio_checks(const DyadicTrace& trace, double beta, double h, double floor = 1e-11);

// ---- Dini sums -----------------------------------------------------------

struct DiniReport {
  double gamma0 = 0.0;
  double sum = 0.0;
  double log2M = 0.0;
  double M = 1.0;
  int terms = 0;

  nlohmann::json to_json() const;
};

/// Converged sum of omega(2^-k) and M = 2^{(2/(2-gamma0)) sum}. Throws unless
/// the Dini check converges within k_max terms and gamma0 < 2.
DiniReport dini_sum(const ModulusOfContinuity& omega, double gamma0, int k_max = 256, double cap = 1e6);

// ---- Hoelder / Campanato -------------------------------------------------

struct HolderFit {
  Point center{0, 0, 0};
  double epsilon_hat = 0.0;
  double constant_hat = 0.0;
  double r_squared = 0.0;
  bool smooth = false;  // no oscillation on any radius
  bool capped = false;
  std::vector<double> radii;
  std::vector<double> oscillations;  // weighted mean of |u - mean|^2 over B_radius

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv() const;
};

/// Mean-square oscillations over B_tau(x0); the log-log slope is 2 epsilon.
/// Nodes are weighted by how much of their dual cell the ball covers, so the
/// ball edge does not bias small radii. Needs tau >= 1.5 h.
HolderFit campanato_fit(const ScalarField& u, const Point& x0, const std::vector<double>& radii);

// ---- free boundary -------------------------------------------------------

struct FreeBoundary {
  double threshold = 0.0;
  std::vector<unsigned char> positive;
  /// Positive nodes with at least one non-positive axis neighbour.
  std::vector<std::size_t> boundary_nodes;
  /// Non-positive nodes with at least one positive axis neighbour.
  std::vector<std::size_t> zero_side_nodes;
  std::vector<double> distance_map;
  bool empty_positive = false;
  bool full_positive = false;

  nlohmann::json to_json() const;
};

FreeBoundary extract_free_boundary(const ScalarField& u, double threshold);

/// The zero-side free-boundary node nearest to p; throws if there is none.
std::size_t nearest_zero_side_node(const FreeBoundary& fb, const Grid& grid, const Point& p);

/// Largest gamma over the boundary nodes (-inf when there are none).
double max_gamma_on_boundary(const FreeBoundary& fb, const ExponentField& gamma);

struct RepellingReport {
  Point x0{0, 0, 0};
  double gamma_at_x0 = 0.0;
  double nu = 0.0;
  bool applicable = false;
  double distance = std::numeric_limits<double>::infinity();
  double bound = 0.0;
  double mesh_tolerance = 0.0;
  bool satisfied = false;

  nlohmann::json to_json(int dim) const;
};

/// d = distance from x0 to the boundary nodes, compared with omega^{-1}(gamma(x0) - 2)
/// up to 2h. Not applicable when gamma(x0) <= 2.
RepellingReport repelling_distance(const ScalarField& u, const ExponentField& gamma, const ModulusOfContinuity& omega,
                                   const Point& x0, const FreeBoundary& fb);

// ---- flatness ------------------------------------------------------------

struct FlatnessInstance {
  std::string label;
  ScalarField phi;
  CoefficientField a;
  ForcingField lambda_base;
  ExponentField gamma;
};

struct FlatnessOptions {
  double s0 = 1.0;
  int max_doublings = 30;
  int bisection_steps = 12;
  /// u(0) <= zero_threshold counts as u(0) = 0.
  double zero_threshold = 1e-11;
  MinimizeOptions solver;
};

struct FlatnessProbe {
  double s = 0.0;
  bool holds = false;
  std::size_t zero_at_origin = 0;  // members with u(0) = 0
  double worst_sup = 0.0;          // largest sup_{B_1/2} u among those members
};

struct FlatnessResult {
  double rho_target = 0.0;
  bool infinite = false;
  /// No probe failed within max_doublings; threshold is then only a lower bound.
  bool unbracketed = false;
  double threshold = 0.0;   // largest probed s at which the property held
  double failing_s = std::numeric_limits<double>::infinity();  // smallest probed s at which it failed
  std::vector<std::string> family;
  std::vector<FlatnessProbe> probes;

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv() const;
};

/// Property P(s): for every member, with lambda = s * lambda_base, the minimiser
/// u either has u(0) > 0 or satisfies sup_{B_1/2} u <= rho_target. Doubles s from
/// s0 until P fails, then bisects between the last pass and the first failure.
/// A family with lambda_base = 0 everywhere has an infinite threshold.
FlatnessResult flatness_experiment(const std::vector<FlatnessInstance>& family, double rho_target,
                                   const FlatnessOptions& opts = {});

}  // namespace fbs
