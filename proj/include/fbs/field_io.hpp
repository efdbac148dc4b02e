#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fbs/fields.hpp"

namespace fbs {

// Plain-text node dump:
//
//   fbslab-field 1
//   dim <n>
//   cells_per_axis <N_0> ... <N_{n-1}>     (node count per axis)
//   spacing <h_0> ... <h_{n-1}>
//   origin <x_0> ... <x_{n-1}>
//   values <count>
//   <one value per line, row-major, last axis fastest, %.17g>

void write_field(std::ostream& os, const Grid& grid, const std::vector<double>& values);
void write_field(const std::string& path, const ScalarField& f);

struct FieldDump {
  Grid grid;
  std::vector<double> values;
};

FieldDump read_field(std::istream& is);
FieldDump read_field(const std::string& path);

}  // namespace fbs
