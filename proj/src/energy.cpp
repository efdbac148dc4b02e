#include "fbs/energy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "fbs/error.hpp"
#include "fbs/kernels.hpp"
#include "fbs/q1.hpp"

namespace fbs {

namespace {

template <class Kernel>
EnergyBreakdown evaluate(Kernel&& kernel, const ScalarField& u, const CoefficientField& a, const ForcingField& lam,
                         const ExponentField& gam, const Region& region, double zero_tol) {
  const Grid& g = u.grid();
  require_same_grid(g, a.grid(), "energy: u vs A");
  require_same_grid(g, lam.grid(), "energy: u vs lambda");
  require_same_grid(g, gam.grid(), "energy: u vs gamma");
  const auto mask = region_cells(g, region);
  const Q1Element el(g);

  kernels::EnergyInputs in;
  in.grid = &g;
  in.element = &el;
  in.u = u.values();
  in.a_entries = a.entries();
  in.lambda = lam.values();
  in.gamma = gam.values();
  in.cell_mask = mask;
  in.zero_tol = zero_tol;
  const kernels::EnergyTerms t = kernel(in);

  EnergyBreakdown e;
  e.dirichlet = t.dirichlet;
  e.singular = t.singular;
  e.total = t.dirichlet + t.singular;
  e.region = region;
  return e;
}

/// (1/8) sum_d max |second difference along d|: the classical bound for
/// multilinear interpolation of a C^2 function sampled on the grid.
double interpolation_error_bound(const ScalarField& u) {
  const Grid& g = u.grid();
  double bound = 0.0;
  for (int d = 0; d < g.dim(); ++d) {
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      Index ijk = g.multi(i);
      if (ijk[d] == 0 || ijk[d] == g.nodes(d) - 1) continue;
      Index lo = ijk, hi = ijk;
      --lo[d];
      ++hi[d];
      m = std::max(m, std::abs(u[g.id(lo)] - 2.0 * u[i] + u[g.id(hi)]));
    }
    bound += m / 8.0;
  }
  return bound;
}

std::vector<double> resample(const Grid& src, const std::vector<double>& values, const Grid& dst,
                             const std::function<Point(const Point&)>& map) {
  std::vector<double> out(dst.size());
  for (std::size_t i = 0; i < dst.size(); ++i) out[i] = interpolate(src, values, map(dst.coord(i)));
  return out;
}

std::vector<double> resample_matrix(const CoefficientField& a, const Grid& dst,
                                    const std::function<Point(const Point&)>& map) {
  const int nn = a.dim() * a.dim();
  std::vector<double> out(dst.size() * nn, 0.0);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const InterpStencil s = interpolation_stencil(a.grid(), map(dst.coord(i)));
    for (int k = 0; k < s.count; ++k)
      for (int e = 0; e < nn; ++e) out[i * nn + e] += s.weights[k] * a.entries()[s.ids[k] * nn + e];
  }
  return out;
}

}  // namespace

EnergyBreakdown energy(const ScalarField& u, const CoefficientField& a, const ForcingField& lam,
                       const ExponentField& gam, const Region& region, double zero_tol) {
  return evaluate([](const kernels::EnergyInputs& in) { return kernels::omp::energy(in); }, u, a, lam, gam, region,
                  zero_tol);
}

EnergyBreakdown energy_serial(const ScalarField& u, const CoefficientField& a, const ForcingField& lam,
                              const ExponentField& gam, const Region& region, double zero_tol) {
  return evaluate([](const kernels::EnergyInputs& in) { return kernels::serial::energy(in); }, u, a, lam, gam,
                  region, zero_tol);
}

std::string energy_csv_header() { return "region,dirichlet,singular,total"; }

std::string energy_csv_row(const EnergyBreakdown& e, int dim) {
  std::string label = "whole";
  if (e.region.ball) {
    label = "ball(";
    char buf[40];
    for (int d = 0; d < dim; ++d) {
      std::snprintf(buf, sizeof buf, "%.17g;", e.region.ball->center[d]);
      label += buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g)", e.region.ball->radius);
    label += buf;
  }
  char row[128];
  std::snprintf(row, sizeof row, ",%.17g,%.17g,%.17g", e.dirichlet, e.singular, e.total);
  return label + row;
}

ScaledProblem scale_local(const ScalarField& u, const CoefficientField& a, const ForcingField& lam,
                          const ExponentField& gam, const Point& x0, double rho, double mu_scale,
                          const std::optional<Grid>& target) {
  const Grid& g = u.grid();
  require_same_grid(g, a.grid(), "scale_local: u vs A");
  require_same_grid(g, lam.grid(), "scale_local: u vs lambda");
  require_same_grid(g, gam.grid(), "scale_local: u vs gamma");
  if (!(mu_scale > 0.0)) throw Error("scale_local: mu_scale must be positive");
  if (!(rho > 0.0)) throw Error("scale_local: rho must be positive");
  double room = INFINITY;
  for (int d = 0; d < g.dim(); ++d) room = std::min({room, x0[d] - g.lower(d), g.upper(d) - x0[d]});
  if (rho > room * (1.0 + 1e-12)) throw Error("scale_local: rho exceeds the distance from x0 to the box boundary");

  const Grid dst = target.value_or(g);
  const int n = g.dim();
  auto map = [&](const Point& x) {
    Point y{0, 0, 0};
    for (int d = 0; d < n; ++d) y[d] = x0[d] + rho * x[d];
    return y;
  };

  std::vector<double> v = resample(g, u.values(), dst, map);
  for (double& x : v) x /= mu_scale;
  std::vector<double> gs = resample(g, gam.values(), dst, map);
  std::vector<double> ls = resample(g, lam.values(), dst, map);
  const double ratio2 = (rho / mu_scale) * (rho / mu_scale);
  double lsup = 0.0;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    ls[i] = std::pow(mu_scale, gs[i]) * ratio2 * ls[i];
    lsup = std::max(lsup, ls[i]);
  }
  for (double& x : gs) x = std::clamp(x, 0.0, gam.gamma_star());

  ScaledProblem out{ScalarField(dst, std::move(v)), CoefficientField(dst, resample_matrix(a, dst, map), a.mu()),
                    ForcingField(dst, std::move(ls), std::max(lam.cap(), lsup)),
                    ExponentField(dst, std::move(gs), gam.gamma_star())};
  out.x0 = x0;
  out.rho = rho;
  out.mu_scale = mu_scale;
  out.lambda_sup = lsup;
  out.interpolation_bound = interpolation_error_bound(u) / mu_scale;
  return out;
}

ScaledProblem rescale_growth(const ScalarField& u, const CoefficientField& a, const ForcingField& lam,
                             const ExponentField& gam, double r, double beta) {
  const Grid& g = u.grid();
  require_same_grid(g, a.grid(), "rescale_growth: u vs A");
  require_same_grid(g, lam.grid(), "rescale_growth: u vs lambda");
  require_same_grid(g, gam.grid(), "rescale_growth: u vs gamma");
  if (!(beta > 1.0)) throw Error("rescale_growth: beta must exceed 1");
  if (!(r > 0.0 && r <= 1.0)) throw Error("rescale_growth: r must lie in (0, 1]");
  const int n = g.dim();
  for (int d = 0; d < n; ++d)
    if (r * g.lower(d) < g.lower(d) || r * g.upper(d) > g.upper(d))
      throw Error("rescale_growth: the box must contain its image under x -> r x");

  auto map = [&](const Point& x) {
    Point y{0, 0, 0};
    for (int d = 0; d < n; ++d) y[d] = r * x[d];
    return y;
  };

  const double rb = std::pow(r, beta);
  std::vector<double> v = resample(g, u.values(), g, map);
  for (double& x : v) x /= rb;
  std::vector<double> gs = resample(g, gam.values(), g, map);
  std::vector<double> ls = resample(g, lam.values(), g, map);
  double lsup = 0.0;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    ls[i] *= std::pow(r, gs[i] * beta - 2.0 * (beta - 1.0));
    lsup = std::max(lsup, ls[i]);
  }
  for (double& x : gs) x = std::clamp(x, 0.0, gam.gamma_star());

  // gamma_star(r) := inf of gamma over B_r(0), read off the nodes of the ball.
  const Ball br{Point{0, 0, 0}, r};
  double gstar = INFINITY;
  for (std::size_t i : ball_nodes(g, br)) gstar = std::min(gstar, gam[i]);
  if (!std::isfinite(gstar)) gstar = gam[g.nearest_node(Point{0, 0, 0})];

  ScaledProblem out{ScalarField(g, std::move(v)), CoefficientField(g, resample_matrix(a, g, map), a.mu()),
                    ForcingField(g, std::move(ls), std::max(lam.cap(), lsup)),
                    ExponentField(g, std::move(gs), gam.gamma_star())};
  out.r = r;
  out.beta = beta;
  out.gamma_star_r = gstar;
  out.admissible = gstar >= 2.0 || beta <= 2.0 / (2.0 - gstar);
  out.lambda_sup = lsup;
  out.interpolation_bound = interpolation_error_bound(u) / rb;
  return out;
}

}  // namespace fbs
