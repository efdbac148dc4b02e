#include "fbs/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fbs/error.hpp"

namespace fbs {

double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(s);
}

Grid::Grid(int dim, Index nodes_per_axis, Point lower, Point upper) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw Error("grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
  size_ = 1;
  cell_count_ = 1;
  cell_volume_ = 1.0;
  for (int d = 0; d < dim; ++d) {
    if (nodes_per_axis[d] < 3) throw Error("grid needs at least 3 nodes per axis");
    if (!(upper[d] > lower[d])) throw Error("grid box must have positive extent on every axis");
    nodes_[d] = nodes_per_axis[d];
    lower_[d] = lower[d];
    upper_[d] = upper[d];
    spacing_[d] = (upper[d] - lower[d]) / (nodes_per_axis[d] - 1);
    size_ *= static_cast<std::size_t>(nodes_[d]);
    cell_count_ *= static_cast<std::size_t>(nodes_[d] - 1);
    cell_volume_ *= spacing_[d];
  }
  int stride = 1;
  for (int d = dim - 1; d >= 0; --d) {
    stride_[d] = stride;
    stride *= nodes_[d];
  }
}

Grid Grid::box(int dim, int nodes_per_axis, double half_width) {
  Index n{1, 1, 1};
  Point lo{0, 0, 0}, hi{0, 0, 0};
  for (int d = 0; d < dim && d < kMaxDim; ++d) {
    n[d] = nodes_per_axis;
    lo[d] = -half_width;
    hi[d] = half_width;
  }
  return Grid(dim, n, lo, hi);
}

double Grid::mesh_size() const {
  double h = 0.0;
  for (int d = 0; d < dim_; ++d) h = std::max(h, spacing_[d]);
  return h;
}

std::size_t Grid::id(const Index& ijk) const {
  std::size_t k = 0;
  for (int d = 0; d < dim_; ++d) k += static_cast<std::size_t>(ijk[d]) * stride_[d];
  return k;
}

Index Grid::multi(std::size_t id) const {
  Index ijk{0, 0, 0};
  for (int d = 0; d < dim_; ++d) {
    ijk[d] = static_cast<int>(id / stride_[d]);
    id %= stride_[d];
  }
  return ijk;
}

Point Grid::coord(const Index& ijk) const {
  Point p{0, 0, 0};
  for (int d = 0; d < dim_; ++d) {
    // Pin the last node to the upper bound so the box is reproduced exactly.
    p[d] = ijk[d] == nodes_[d] - 1 ? upper_[d] : lower_[d] + ijk[d] * spacing_[d];
  }
  return p;
}

Point Grid::coord(std::size_t id) const { return coord(multi(id)); }

bool Grid::on_boundary(std::size_t id) const {
  const Index ijk = multi(id);
  for (int d = 0; d < dim_; ++d)
    if (ijk[d] == 0 || ijk[d] == nodes_[d] - 1) return true;
  return false;
}

Index Grid::cell_multi(std::size_t cell_id) const {
  Index c{0, 0, 0};
  for (int d = dim_ - 1; d >= 0; --d) {
    const auto m = static_cast<std::size_t>(nodes_[d] - 1);
    c[d] = static_cast<int>(cell_id % m);
    cell_id /= m;
  }
  return c;
}

Point Grid::cell_center(std::size_t cell_id) const {
  const Index c = cell_multi(cell_id);
  Point p{0, 0, 0};
  for (int d = 0; d < dim_; ++d) p[d] = lower_[d] + (c[d] + 0.5) * spacing_[d];
  return p;
}

void Grid::cell_corners(std::size_t cell_id, std::array<std::size_t, 8>& out) const {
  const std::size_t base = id(cell_multi(cell_id));
  const int corners = 1 << dim_;
  for (int c = 0; c < corners; ++c) {
    std::size_t k = base;
    for (int d = 0; d < dim_; ++d)
      if (c & (1 << d)) k += stride_[d];
    out[c] = k;
  }
}

std::size_t Grid::nearest_node(const Point& p) const {
  Index ijk{0, 0, 0};
  for (int d = 0; d < dim_; ++d) {
    const double f = (p[d] - lower_[d]) / spacing_[d];
    ijk[d] = std::clamp(static_cast<int>(std::lround(f)), 0, nodes_[d] - 1);
  }
  return id(ijk);
}

bool Grid::contains(const Point& p, double slack) const {
  for (int d = 0; d < dim_; ++d)
    if (p[d] < lower_[d] - slack || p[d] > upper_[d] + slack) return false;
  return true;
}

int Grid::axis_neighbors(std::size_t id, std::array<std::size_t, 2 * kMaxDim>& out) const {
  const Index ijk = multi(id);
  int n = 0;
  for (int d = 0; d < dim_; ++d) {
    if (ijk[d] > 0) out[n++] = id - stride_[d];
    if (ijk[d] < nodes_[d] - 1) out[n++] = id + stride_[d];
  }
  return n;
}

bool Grid::operator==(const Grid& o) const {
  if (dim_ != o.dim_) return false;
  for (int d = 0; d < dim_; ++d)
    if (nodes_[d] != o.nodes_[d] || lower_[d] != o.lower_[d] || upper_[d] != o.upper_[d]) return false;
  return true;
}

bool Ball::contains(const Point& p, int dim) const {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += (p[d] - center[d]) * (p[d] - center[d]);
  return s <= radius * radius * (1.0 + 1e-12);
}

std::vector<std::size_t> ball_nodes(const Grid& grid, const Ball& ball) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (ball.contains(grid.coord(i), grid.dim())) ids.push_back(i);
  return ids;
}

void require_inside(const Grid& grid, const Ball& ball) {
  if (!(ball.radius > 0.0)) throw Error("ball radius must be positive");
  const double slack = 1e-12 * std::max(1.0, ball.radius);
  for (int d = 0; d < grid.dim(); ++d) {
    if (ball.center[d] - ball.radius < grid.lower(d) - slack || ball.center[d] + ball.radius > grid.upper(d) + slack)
      throw Error("ball escapes the grid box on axis " + std::to_string(d));
  }
}

std::vector<unsigned char> region_cells(const Grid& grid, const Region& region) {
  std::vector<unsigned char> mask(grid.cell_count(), 1);
  if (!region.ball) return mask;
  require_inside(grid, *region.ball);
  for (std::size_t c = 0; c < grid.cell_count(); ++c)
    mask[c] = region.ball->contains(grid.cell_center(c), grid.dim()) ? 1 : 0;
  return mask;
}

InterpStencil interpolation_stencil(const Grid& grid, const Point& p) {
  std::array<int, kMaxDim> base{0, 0, 0};
  std::array<double, kMaxDim> frac{0, 0, 0};
  std::array<int, kMaxDim> width{1, 1, 1};
  for (int d = 0; d < grid.dim(); ++d) {
    const double x = std::clamp(p[d], grid.lower(d), grid.upper(d));
    double f = (x - grid.lower(d)) / grid.spacing(d);
    const double r = std::round(f);
    if (std::abs(f - r) < 1e-9) f = r;
    int i = static_cast<int>(std::floor(f));
    i = std::clamp(i, 0, grid.nodes(d) - 1);
    double t = f - i;
    if (i == grid.nodes(d) - 1) t = 0.0;
    base[d] = i;
    frac[d] = t;
    width[d] = t > 0.0 ? 2 : 1;
  }
  InterpStencil s;
  for (int a = 0; a < width[0]; ++a)
    for (int b = 0; b < (grid.dim() > 1 ? width[1] : 1); ++b)
      for (int c = 0; c < (grid.dim() > 2 ? width[2] : 1); ++c) {
        const Index off{a, b, c};
        Index ijk{0, 0, 0};
        double w = 1.0;
        for (int d = 0; d < grid.dim(); ++d) {
          ijk[d] = base[d] + off[d];
          if (width[d] == 2) w *= off[d] ? frac[d] : 1.0 - frac[d];
        }
        s.ids[s.count] = grid.id(ijk);
        s.weights[s.count] = w;
        ++s.count;
      }
  return s;
}

double interpolate(const Grid& grid, const std::vector<double>& values, const Point& p) {
  const InterpStencil s = interpolation_stencil(grid, p);
  double v = 0.0;
  for (int k = 0; k < s.count; ++k) v += s.weights[k] * values[s.ids[k]];
  return v;
}

}  // namespace fbs
