#include "fbs/field_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fbs/error.hpp"

namespace fbs {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void expect(std::istream& is, const std::string& key) {
  std::string got;
  if (!(is >> got) || got != key) throw Error("field dump: expected \"" + key + "\", got \"" + got + "\"");
}

}  // namespace

void write_field(std::ostream& os, const Grid& grid, const std::vector<double>& values) {
  const int n = grid.dim();
  os << "fbslab-field 1\n";
  os << "dim " << n << "\n";
  os << "cells_per_axis";
  for (int d = 0; d < n; ++d) os << ' ' << grid.nodes(d);
  os << "\nspacing";
  for (int d = 0; d < n; ++d) os << ' ' << fmt(grid.spacing(d));
  os << "\norigin";
  for (int d = 0; d < n; ++d) os << ' ' << fmt(grid.lower(d));
  os << "\nvalues " << values.size() << "\n";
  for (double v : values) os << fmt(v) << "\n";
}

void write_field(const std::string& path, const ScalarField& f) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write field dump " + path);
  write_field(os, f.grid(), f.values());
}

FieldDump read_field(std::istream& is) {
  expect(is, "fbslab-field");
  int version = 0;
  is >> version;
  if (version != 1) throw Error("field dump: unsupported version");
  expect(is, "dim");
  int n = 0;
  is >> n;
  if (n < 1 || n > kMaxDim) throw Error("field dump: bad dimension");
  Index nodes{1, 1, 1};
  Point h{0, 0, 0}, lo{0, 0, 0}, hi{0, 0, 0};
  expect(is, "cells_per_axis");
  for (int d = 0; d < n; ++d) is >> nodes[d];
  expect(is, "spacing");
  for (int d = 0; d < n; ++d) is >> h[d];
  expect(is, "origin");
  for (int d = 0; d < n; ++d) is >> lo[d];
  for (int d = 0; d < n; ++d) hi[d] = lo[d] + h[d] * (nodes[d] - 1);
  expect(is, "values");
  std::size_t count = 0;
  is >> count;
  if (!is) throw Error("field dump: malformed header");
  Grid grid(n, nodes, lo, hi);
  if (count != grid.size()) throw Error("field dump: value count does not match the grid");
  std::vector<double> values(count);
  for (auto& v : values) {
    std::string tok;
    if (!(is >> tok)) throw Error("field dump: truncated body");
    v = std::strtod(tok.c_str(), nullptr);
  }
  return {std::move(grid), std::move(values)};
}

FieldDump read_field(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open field dump " + path);
  return read_field(is);
}

}  // namespace fbs
