#include "fbs/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbs/error.hpp"

namespace fbs {

namespace {

struct Ops {
  void (*apply)(const kernels::FluxStencil&, std::span<const double>, std::span<double>);
  double (*dot)(std::span<const double>, std::span<const double>);
};

Ops ops(bool parallel) {
  if (parallel) return {&kernels::omp::apply_flux, &kernels::omp::dot};
  return {&kernels::serial::apply_flux, &kernels::serial::dot};
}

double scaled_residual(const std::vector<double>& r, const std::vector<double>& diag,
                       const std::vector<unsigned char>& active) {
  double m = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (active[i]) m = std::max(m, std::abs(r[i]) / diag[i]);
  return m;
}

}  // namespace

kernels::FluxStencil build_flux_stencil(const CoefficientField& a, std::vector<unsigned char> active) {
  const Grid& g = a.grid();
  if (active.size() != g.size()) throw Error("build_flux_stencil: mask size does not match the grid");
  kernels::FluxStencil st;
  st.grid = &a.grid();
  st.active = std::move(active);
  std::size_t stride = 1;
  for (int d = g.dim() - 1; d >= 0; --d) {
    auto& face = st.face[d];
    face.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.multi(i)[d] == g.nodes(d) - 1) continue;
      const double p = a.entry(i, d, d);
      const double q = a.entry(i + stride, d, d);
      face[i] = 2.0 * p * q / (p + q);
      if (!(face[i] > 0.0)) throw Error("build_flux_stencil: non-positive face coefficient, stencil is not an M-matrix");
    }
    stride *= static_cast<std::size_t>(g.nodes(d));
  }
  return st;
}

std::vector<unsigned char> replacement_unknowns(const Grid& grid, const Ball& ball) {
  std::vector<unsigned char> in(grid.size(), 0), unknown(grid.size(), 0);
  for (std::size_t i : ball_nodes(grid, ball)) in[i] = 1;
  std::array<std::size_t, 2 * kMaxDim> nb{};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!in[i] || grid.on_boundary(i)) continue;
    const int k = grid.axis_neighbors(i, nb);
    bool all = true;
    for (int j = 0; j < k; ++j) all = all && in[nb[j]];
    unknown[i] = all ? 1 : 0;
  }
  return unknown;
}

ReplacementResult harmonic_replacement(const ScalarField& u, const CoefficientField& a, const Ball& ball,
                                       const ReplacementOptions& opts) {
  const Grid& g = u.grid();
  require_same_grid(g, a.grid(), "harmonic_replacement: u vs A");
  require_admissible(a);
  require_inside(g, ball);
  if (!(opts.tol > 0.0)) throw Error("harmonic_replacement: tolerance must be positive");

  std::vector<unsigned char> active = replacement_unknowns(g, ball);
  const std::size_t unknowns = static_cast<std::size_t>(std::count(active.begin(), active.end(), 1));
  if (unknowns == 0) throw Error("harmonic_replacement: the ball has no interior nodes at this resolution");
  const kernels::FluxStencil st = build_flux_stencil(a, active);
  const Ops op = ops(opts.parallel);
  const std::size_t n = g.size();

  std::vector<double> diag(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    if (active[i]) diag[i] = kernels::flux_diagonal(st, i);

  // Right-hand side: minus the coupling of the unknowns to the fixed values.
  std::vector<double> fixed = u.values(), b(n, 0.0), x(n, 0.0), r(n), z(n), p(n), q(n);
  for (std::size_t i = 0; i < n; ++i)
    if (active[i]) {
      fixed[i] = 0.0;
      x[i] = u[i];
    }
  op.apply(st, fixed, b);
  for (double& v : b) v = -v;

  op.apply(st, x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  auto precondition = [&] {
    for (std::size_t i = 0; i < n; ++i) z[i] = opts.jacobi && active[i] ? r[i] / diag[i] : r[i];
  };
  precondition();
  p = z;
  double rz = op.dot(r, z);

  const int max_it = opts.max_iterations > 0 ? opts.max_iterations : static_cast<int>(20 * unknowns + 100);
  double res = scaled_residual(r, diag, active);
  std::vector<double> best = x;
  double best_res = res;
  int it = 0;
  while (res > opts.tol && it < max_it && rz != 0.0) {
    op.apply(st, p, q);
    const double pq = op.dot(p, q);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    ++it;
    precondition();
    const double rz_new = op.dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    res = scaled_residual(r, diag, active);
    if (res < best_res) {
      best_res = res;
      best = x;
    }
  }

  // Report the true residual of the returned iterate.
  op.apply(st, best, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = active[i] ? b[i] - q[i] : 0.0;
  const double true_res = scaled_residual(r, diag, active);

  std::vector<double> h = u.values();
  for (std::size_t i = 0; i < n; ++i)
    if (active[i]) h[i] = best[i];

  ReplacementResult out{ScalarField(g, std::move(h))};
  out.residual = true_res;
  out.iterations = it;
  out.stagnated = true_res > opts.tol;
  out.unknowns = unknowns;
  out.data_min = out.h_min = std::numeric_limits<double>::infinity();
  out.data_max = out.h_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i : ball_nodes(g, ball)) {
    const double v = out.h[i];
    out.h_min = std::min(out.h_min, v);
    out.h_max = std::max(out.h_max, v);
    if (!active[i]) {
      out.data_min = std::min(out.data_min, v);
      out.data_max = std::max(out.data_max, v);
    }
  }
  out.max_principle_violation = std::max({out.data_min - out.h_min, out.h_max - out.data_max, 0.0});
  return out;
}

nlohmann::json ReplacementResult::metadata() const {
  return {{"residual", residual},
          {"iterations", iterations},
          {"stagnated", stagnated},
          {"unknowns", unknowns},
          {"data_range", {data_min, data_max}},
          {"h_range", {h_min, h_max}},
          {"max_principle_violation", max_principle_violation}};
}

double replacement_deficit(const ScalarField& u, const ScalarField& h, const Ball& ball) {
  require_same_grid(u.grid(), h.grid(), "replacement_deficit: u vs h");
  const auto nodes = ball_nodes(u.grid(), ball);
  if (nodes.empty()) throw Error("replacement_deficit: the ball contains no nodes");
  double s = 0.0;
  for (std::size_t i : nodes) s += (u[i] - h[i]) * (u[i] - h[i]);
  return s / static_cast<double>(nodes.size());
}

HarnackQuotient harnack_quotient(const ScalarField& h, const Ball& inner, const Point& eval_point) {
  const Grid& g = h.grid();
  require_inside(g, inner);
  const auto nodes = ball_nodes(g, inner);
  if (nodes.empty()) throw Error("harnack_quotient: the inner ball contains no nodes");
  HarnackQuotient hq;
  hq.sup = -std::numeric_limits<double>::infinity();
  hq.inf = std::numeric_limits<double>::infinity();
  for (std::size_t i : nodes) {
    if (!(h[i] > 0.0)) throw Error("harnack_quotient: h is not positive on the inner ball");
    hq.sup = std::max(hq.sup, h[i]);
    hq.inf = std::min(hq.inf, h[i]);
  }
  hq.at_point = interpolate(g, h.values(), eval_point);
  if (!(hq.at_point > 0.0)) throw Error("harnack_quotient: h is not positive at the evaluation point");
  hq.sup_ratio = hq.sup / hq.at_point;
  hq.quotient = hq.sup / hq.inf;
  return hq;
}

SubharmonicResidual subharmonic_residual(const ScalarField& u, const CoefficientField& a) {
  const Grid& g = u.grid();
  require_same_grid(g, a.grid(), "subharmonic_residual: u vs A");
  std::vector<unsigned char> active(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) active[i] = g.on_boundary(i) ? 0 : 1;
  const kernels::FluxStencil st = build_flux_stencil(a, active);
  std::vector<double> y(g.size());
  kernels::omp::apply_flux(st, u.values(), y);
  SubharmonicResidual out;
  out.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!active[i]) continue;
    if (-y[i] < out.min_value) {
      out.min_value = -y[i];
      out.witness = i;
    }
  }
  if (!std::isfinite(out.min_value)) throw Error("subharmonic_residual: the grid has no interior nodes");
  out.witness_point = g.coord(out.witness);
  return out;
}

}  // namespace fbs
