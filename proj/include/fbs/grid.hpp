#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace fbs {

inline constexpr int kMaxDim = 3;

/// A point in R^n; components beyond the grid dimension are ignored and kept 0.
using Point = std::array<double, kMaxDim>;
using Index = std::array<int, kMaxDim>;

double distance(const Point& a, const Point& b, int dim);

/// Uniform tensor grid on an axis-aligned box. Node ids are row-major: the
/// last axis varies fastest.
class Grid {
 public:
  Grid(int dim, Index nodes_per_axis, Point lower, Point upper);

  /// Canonical box [-half_width, half_width]^dim with the same node count on
  /// every axis.
  static Grid box(int dim, int nodes_per_axis, double half_width = 1.0);

  int dim() const { return dim_; }
  int nodes(int axis) const { return nodes_[axis]; }
  const Index& nodes_per_axis() const { return nodes_; }
  double spacing(int axis) const { return spacing_[axis]; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  /// Largest spacing over active axes.
  double mesh_size() const;

  std::size_t size() const { return size_; }
  std::size_t cell_count() const { return cell_count_; }
  double cell_volume() const { return cell_volume_; }

  std::size_t id(const Index& ijk) const;
  Index multi(std::size_t id) const;
  Point coord(std::size_t id) const;
  Point coord(const Index& ijk) const;
  bool on_boundary(std::size_t id) const;

  /// Lower-corner node id of a cell given by its per-axis cell index.
  std::size_t cell_origin(const Index& cell) const { return id(cell); }
  Index cell_multi(std::size_t cell_id) const;
  Point cell_center(std::size_t cell_id) const;
  /// Node ids of the 2^dim corners of a cell; corner bit d selects +1 on axis d.
  void cell_corners(std::size_t cell_id, std::array<std::size_t, 8>& out) const;

  /// Node nearest to p (coordinates clamped into the box).
  std::size_t nearest_node(const Point& p) const;
  bool contains(const Point& p, double slack = 1e-12) const;

  /// Grid-axis neighbours (±1 on one axis) of an id; fills up to 2*dim ids and
  /// returns how many exist.
  int axis_neighbors(std::size_t id, std::array<std::size_t, 2 * kMaxDim>& out) const;

  bool operator==(const Grid& other) const;
  bool operator!=(const Grid& other) const { return !(*this == other); }

 private:
  int dim_;
  Index nodes_{1, 1, 1};
  Point lower_{0, 0, 0};
  Point upper_{0, 0, 0};
  Point spacing_{1, 1, 1};
  Index stride_{1, 1, 1};
  std::size_t size_ = 1;
  std::size_t cell_count_ = 1;
  double cell_volume_ = 1.0;
};

/// Closed Euclidean ball, realised on a grid as the node set |x - center| <= radius.
struct Ball {
  Point center{0, 0, 0};
  double radius = 1.0;

  bool contains(const Point& p, int dim) const;
};

/// Node ids of `grid` inside the ball.
std::vector<std::size_t> ball_nodes(const Grid& grid, const Ball& ball);

/// Throws unless the ball lies inside the grid box.
void require_inside(const Grid& grid, const Ball& ball);

/// Quadrature region for the energy: the whole grid, or the cells whose centre
/// lies in a ball.
struct Region {
  std::optional<Ball> ball;

  static Region whole() { return {}; }
  static Region of(const Ball& b) { return Region{b}; }
};

/// Per-cell membership mask of a region.
std::vector<unsigned char> region_cells(const Grid& grid, const Region& region);

/// Corner ids and weights of the multilinear interpolant at p; unused slots
/// carry weight 0.
struct InterpStencil {
  std::array<std::size_t, 8> ids{};
  std::array<double, 8> weights{};
  int count = 0;
};
InterpStencil interpolation_stencil(const Grid& grid, const Point& p);

/// Multilinear interpolation of node values at p. Coordinates are clamped into
/// the box, and fractional indices within 1e-9 of a node snap onto it so that
/// sampling at node positions is exact.
double interpolate(const Grid& grid, const std::vector<double>& values, const Point& p);

}  // namespace fbs
