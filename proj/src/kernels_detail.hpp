#pragma once

#include <cmath>
#include <limits>

#include "fbs/kernels.hpp"

namespace fbs::kernels::detail {

inline double flux_row(const FluxStencil& st, std::span<const double> x, std::size_t i) {
  const Grid& g = *st.grid;
  const Index ijk = g.multi(i);
  double y = 0.0;
  std::size_t stride = 1;
  for (int d = g.dim() - 1; d >= 0; --d) {
    const double ih2 = 1.0 / (g.spacing(d) * g.spacing(d));
    if (ijk[d] < g.nodes(d) - 1) y += st.face[d][i] * (x[i] - x[i + stride]) * ih2;
    if (ijk[d] > 0) y += st.face[d][i - stride] * (x[i] - x[i - stride]) * ih2;
    stride *= static_cast<std::size_t>(g.nodes(d));
  }
  return y;
}

inline double nearest_in_set(const Grid& g, std::span<const std::size_t> set, const Point& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s : set) {
    const Point q = g.coord(s);
    double d2 = 0.0;
    for (int d = 0; d < g.dim(); ++d) d2 += (p[d] - q[d]) * (p[d] - q[d]);
    if (d2 < best) best = d2;
  }
  return std::sqrt(best);
}

}  // namespace fbs::kernels::detail
