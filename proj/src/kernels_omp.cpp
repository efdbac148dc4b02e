#include <omp.h>

#include "fbs/kernels.hpp"
#include "kernels_detail.hpp"

namespace fbs::kernels::omp {

namespace {

std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

}  // namespace

EnergyTerms energy(const EnergyInputs& in) {
  const std::size_t cells = in.grid->cell_count();
  const std::size_t nb = block_count(cells);
  std::vector<EnergyTerms> part(nb);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    EnergyTerms acc;
    const std::size_t end = std::min(cells, (b + 1) * kBlock);
    for (std::size_t c = b * kBlock; c < end; ++c) {
      if (!in.cell_mask[c]) continue;
      const EnergyTerms t = cell_energy(in, c);
      acc.dirichlet += t.dirichlet;
      acc.singular += t.singular;
    }
    part[b] = acc;
  }

  EnergyTerms total;
  for (const auto& p : part) {
    total.dirichlet += p.dirichlet;
    total.singular += p.singular;
  }
  return total;
}

void apply_flux(const FluxStencil& st, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(st.grid->size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = st.active[i] ? detail::flux_row(st, x, i) : 0.0;
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t nb = block_count(n);
  std::vector<double> part(nb, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(nb); ++k) {
    double s = 0.0;
    const std::size_t end = std::min(n, (k + 1) * kBlock);
    for (std::size_t i = k * kBlock; i < end; ++i) s += a[i] * b[i];
    part[k] = s;
  }
  double s = 0.0;
  for (double p : part) s += p;
  return s;
}

void distance_to_set(const Grid& grid, std::span<const std::size_t> set, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = detail::nearest_in_set(grid, set, grid.coord(i));
}

}  // namespace fbs::kernels::omp
