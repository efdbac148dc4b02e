#pragma once

// Analytic field specs. A spec is a JSON object with a "type" tag:
//
//   const                {value}
//   affine               {offset, slope[]}                 offset + <slope, x>
//   radial               {center[], power, scale, offset}  offset + scale |x - center|^power
//   positive_part_power  {direction[], shift, scale, power} scale (<direction, x> - shift)_+^power
//   bump                 {center[], radius, height, base}  base + height exp(1 - 1/(1 - s^2)), s = |x-c|/radius
//   random               {seed, low, high}                 iid uniform node values
//   sum                  {terms: [spec, ...]}
//
// Coefficient specs:
//
//   identity
//   diag                 {values[]}
//   matrix               {entries[][]}
//   checkerboard         {a[], b[], tiles}   diagonal a / b alternating by tile parity
//                                            (tiles = 0: node parity)
//   random               {seed}              per-node random SPD with spectrum inside the window

#include <json.hpp>

#include "fbs/fields.hpp"

namespace fbs {

using json = nlohmann::json;

/// Node-wise evaluation of a scalar spec. `path` names the spec in error messages.
std::vector<double> sample_values(const json& spec, const Grid& grid, const std::string& path = "field");

ScalarField sample_scalar(const json& spec, const Grid& grid, const std::string& path = "field");
ExponentField sample_exponent(const json& spec, const Grid& grid, double gamma_star, const std::string& path = "gamma");
ForcingField sample_forcing(const json& spec, const Grid& grid, double lambda_cap, const std::string& path = "lambda");
CoefficientField sample_coefficient(const json& spec, const Grid& grid, double mu, const std::string& path = "A");

/// Throws ConfigError unless the spec is well formed (does not evaluate it).
void check_scalar_spec(const json& spec, int dim, const std::string& path);
void check_coefficient_spec(const json& spec, int dim, const std::string& path);

}  // namespace fbs
