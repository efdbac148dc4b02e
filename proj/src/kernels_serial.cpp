#include <algorithm>
#include <cmath>

#include "fbs/kernels.hpp"
#include "kernels_detail.hpp"

namespace fbs::kernels {

EnergyTerms cell_energy(const EnergyInputs& in, std::size_t cell) {
  const Grid& g = *in.grid;
  const int n = g.dim();
  const int nc = 1 << n;
  std::array<std::size_t, 8> corner{};
  g.cell_corners(cell, corner);

  double abar[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
  for (int c = 0; c < nc; ++c)
    for (int k = 0; k < n * n; ++k) abar[k] += in.a_entries[corner[c] * n * n + k];
  for (int k = 0; k < n * n; ++k) abar[k] /= nc;

  double uc[8];
  for (int c = 0; c < nc; ++c) uc[c] = in.u[corner[c]];

  EnergyTerms t;
  const Q1Element& el = *in.element;
  for (int d = 0; d < n; ++d)
    for (int e = 0; e < n; ++e) {
      if (abar[d * n + e] == 0.0) continue;
      double q = 0.0;
      for (int a = 0; a < nc; ++a) {
        double row = 0.0;
        for (int b = 0; b < nc; ++b) row += el.m(d, e, a, b) * uc[b];
        q += uc[a] * row;
      }
      t.dirichlet += abar[d * n + e] * q;
    }

  const double w = g.cell_volume() / nc;
  for (int c = 0; c < nc; ++c) {
    const double v = uc[c];
    if (v > in.zero_tol) t.singular += w * in.lambda[corner[c]] * std::pow(v, in.gamma[corner[c]]);
  }
  return t;
}

double flux_diagonal(const FluxStencil& st, std::size_t i) {
  const Grid& g = *st.grid;
  const Index ijk = g.multi(i);
  double y = 0.0;
  std::size_t stride = 1;
  for (int d = g.dim() - 1; d >= 0; --d) {
    const double ih2 = 1.0 / (g.spacing(d) * g.spacing(d));
    if (ijk[d] < g.nodes(d) - 1) y += st.face[d][i] * ih2;
    if (ijk[d] > 0) y += st.face[d][i - stride] * ih2;
    stride *= static_cast<std::size_t>(g.nodes(d));
  }
  return y;
}

namespace serial {

EnergyTerms energy(const EnergyInputs& in) {
  // Same block grouping as the OpenMP reduction, walked in order.
  const std::size_t cells = in.grid->cell_count();
  EnergyTerms total;
  for (std::size_t start = 0; start < cells; start += kBlock) {
    EnergyTerms acc;
    const std::size_t end = std::min(cells, start + kBlock);
    for (std::size_t c = start; c < end; ++c) {
      if (!in.cell_mask[c]) continue;
      const EnergyTerms t = cell_energy(in, c);
      acc.dirichlet += t.dirichlet;
      acc.singular += t.singular;
    }
    total.dirichlet += acc.dirichlet;
    total.singular += acc.singular;
  }
  return total;
}

void apply_flux(const FluxStencil& st, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < st.grid->size(); ++i) y[i] = st.active[i] ? detail::flux_row(st, x, i) : 0.0;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t start = 0; start < a.size(); start += kBlock) {
    double p = 0.0;
    const std::size_t end = std::min(a.size(), start + kBlock);
    for (std::size_t i = start; i < end; ++i) p += a[i] * b[i];
    s += p;
  }
  return s;
}

void distance_to_set(const Grid& grid, std::span<const std::size_t> set, std::span<double> out) {
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = detail::nearest_in_set(grid, set, grid.coord(i));
}

}  // namespace serial
}  // namespace fbs::kernels
