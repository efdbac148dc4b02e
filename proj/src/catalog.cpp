#include "fbs/catalog.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "fbs/error.hpp"

namespace fbs {

namespace {

std::string tag_of(const json& spec, const std::string& path) {
  if (!spec.is_object()) throw ConfigError(path, "field spec must be an object");
  if (!spec.contains("type") || !spec["type"].is_string()) throw ConfigError(path, "field spec needs a string \"type\"");
  return spec["type"].get<std::string>();
}

double num(const json& spec, const char* key, const std::string& path, std::optional<double> fallback = {}) {
  if (!spec.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(path + "." + key, "missing parameter");
  }
  if (!spec[key].is_number()) throw ConfigError(path + "." + key, "expected a number");
  const double v = spec[key].get<double>();
  if (!std::isfinite(v)) throw ConfigError(path + "." + key, "must be finite");
  return v;
}

Point vec(const json& spec, const char* key, int dim, const std::string& path, std::optional<double> fill = {}) {
  Point p{0, 0, 0};
  if (!spec.contains(key)) {
    if (fill) {
      for (int d = 0; d < dim; ++d) p[d] = *fill;
      return p;
    }
    throw ConfigError(path + "." + key, "missing vector parameter");
  }
  const json& a = spec[key];
  if (!a.is_array() || static_cast<int>(a.size()) != dim)
    throw ConfigError(path + "." + key, "expected an array of length " + std::to_string(dim));
  for (int d = 0; d < dim; ++d) {
    if (!a[d].is_number()) throw ConfigError(path + "." + key, "expected numbers");
    p[d] = a[d].get<double>();
  }
  return p;
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double eval_point(const json& spec, const Point& x, int dim, const std::string& path);

double eval_point(const json& spec, const Point& x, int dim, const std::string& path) {
  const std::string tag = tag_of(spec, path);
  if (tag == "const") return num(spec, "value", path);
  if (tag == "affine") {
    const Point s = vec(spec, "slope", dim, path, 0.0);
    double v = num(spec, "offset", path, 0.0);
    for (int d = 0; d < dim; ++d) v += s[d] * x[d];
    return v;
  }
  if (tag == "radial") {
    const Point c = vec(spec, "center", dim, path, 0.0);
    return num(spec, "offset", path, 0.0) + num(spec, "scale", path, 1.0) * std::pow(distance(x, c, dim), num(spec, "power", path, 1.0));
  }
  if (tag == "positive_part_power") {
    const Point dir = vec(spec, "direction", dim, path);
    double t = -num(spec, "shift", path, 0.0);
    for (int d = 0; d < dim; ++d) t += dir[d] * x[d];
    return t > 0.0 ? num(spec, "scale", path, 1.0) * std::pow(t, num(spec, "power", path)) : 0.0;
  }
  if (tag == "bump") {
    const Point c = vec(spec, "center", dim, path, 0.0);
    const double s = distance(x, c, dim) / num(spec, "radius", path);
    const double base = num(spec, "base", path, 0.0);
    if (s >= 1.0) return base;
    return base + num(spec, "height", path, 1.0) * std::exp(1.0 - 1.0 / (1.0 - s * s));
  }
  if (tag == "sum") {
    double v = 0.0;
    const json& terms = spec.at("terms");
    for (std::size_t k = 0; k < terms.size(); ++k) v += eval_point(terms[k], x, dim, path + ".terms[" + std::to_string(k) + "]");
    return v;
  }
  throw ConfigError(path, "unknown field spec type \"" + tag + "\"");
}

bool contains_random(const json& spec) {
  if (!spec.is_object()) return false;
  if (spec.value("type", "") == "random") return true;
  if (spec.contains("terms"))
    for (const auto& t : spec["terms"])
      if (contains_random(t)) return true;
  return false;
}

void add_values(const json& spec, const Grid& grid, const std::string& path, std::vector<double>& out) {
  const std::string tag = tag_of(spec, path);
  if (tag == "random") {
    std::mt19937_64 rng(static_cast<std::uint64_t>(num(spec, "seed", path, 0.0)));
    const double lo = num(spec, "low", path, 0.0);
    const double hi = num(spec, "high", path, 1.0);
    if (hi < lo) throw ConfigError(path, "random field needs low <= high");
    for (double& v : out) v += lo + (hi - lo) * unit(rng);
    return;
  }
  if (tag == "sum" && contains_random(spec)) {
    const json& terms = spec.at("terms");
    for (std::size_t k = 0; k < terms.size(); ++k) add_values(terms[k], grid, path + ".terms[" + std::to_string(k) + "]", out);
    return;
  }
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] += eval_point(spec, grid.coord(i), grid.dim(), path);
}

}  // namespace

void check_scalar_spec(const json& spec, int dim, const std::string& path) {
  const std::string tag = tag_of(spec, path);
  if (tag == "const") {
    num(spec, "value", path);
  } else if (tag == "affine") {
    vec(spec, "slope", dim, path, 0.0);
    num(spec, "offset", path, 0.0);
  } else if (tag == "radial") {
    vec(spec, "center", dim, path, 0.0);
    if (num(spec, "power", path, 1.0) <= 0.0) throw ConfigError(path + ".power", "radial power must be positive");
  } else if (tag == "positive_part_power") {
    vec(spec, "direction", dim, path);
    if (num(spec, "power", path) <= 0.0) throw ConfigError(path + ".power", "power must be positive");
  } else if (tag == "bump") {
    vec(spec, "center", dim, path, 0.0);
    if (num(spec, "radius", path) <= 0.0) throw ConfigError(path + ".radius", "bump radius must be positive");
  } else if (tag == "random") {
    if (num(spec, "high", path, 1.0) < num(spec, "low", path, 0.0)) throw ConfigError(path, "random field needs low <= high");
  } else if (tag == "sum") {
    if (!spec.contains("terms") || !spec["terms"].is_array()) throw ConfigError(path + ".terms", "sum needs a terms array");
    for (std::size_t k = 0; k < spec["terms"].size(); ++k)
      check_scalar_spec(spec["terms"][k], dim, path + ".terms[" + std::to_string(k) + "]");
  } else {
    throw ConfigError(path, "unknown field spec type \"" + tag + "\"");
  }
}

std::vector<double> sample_values(const json& spec, const Grid& grid, const std::string& path) {
  check_scalar_spec(spec, grid.dim(), path);
  std::vector<double> out(grid.size(), 0.0);
  add_values(spec, grid, path, out);
  return out;
}

ScalarField sample_scalar(const json& spec, const Grid& grid, const std::string& path) {
  auto v = sample_values(spec, grid, path);
  try {
    return ScalarField(grid, std::move(v));
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

ExponentField sample_exponent(const json& spec, const Grid& grid, double gamma_star, const std::string& path) {
  auto v = sample_values(spec, grid, path);
  try {
    return ExponentField(grid, std::move(v), gamma_star);
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

ForcingField sample_forcing(const json& spec, const Grid& grid, double lambda_cap, const std::string& path) {
  auto v = sample_values(spec, grid, path);
  try {
    return ForcingField(grid, std::move(v), lambda_cap);
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

void check_coefficient_spec(const json& spec, int dim, const std::string& path) {
  const std::string tag = tag_of(spec, path);
  if (tag == "identity" || tag == "random") return;
  if (tag == "diag") {
    vec(spec, "values", dim, path);
  } else if (tag == "checkerboard") {
    vec(spec, "a", dim, path);
    vec(spec, "b", dim, path);
    if (num(spec, "tiles", path, 0.0) < 0.0) throw ConfigError(path + ".tiles", "tiles must be non-negative");
  } else if (tag == "matrix") {
    if (!spec.contains("entries") || !spec["entries"].is_array() || static_cast<int>(spec["entries"].size()) != dim)
      throw ConfigError(path + ".entries", "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " array");
    for (const auto& row : spec["entries"])
      if (!row.is_array() || static_cast<int>(row.size()) != dim) throw ConfigError(path + ".entries", "ragged matrix");
  } else {
    throw ConfigError(path, "unknown coefficient spec type \"" + tag + "\"");
  }
}

CoefficientField sample_coefficient(const json& spec, const Grid& grid, double mu, const std::string& path) {
  const int n = grid.dim();
  check_coefficient_spec(spec, n, path);
  const std::string tag = spec["type"].get<std::string>();
  std::vector<double> e(grid.size() * n * n, 0.0);
  auto put_diag = [&](std::size_t i, const Point& d) {
    for (int k = 0; k < n; ++k) e[i * n * n + k * n + k] = d[k];
  };

  if (tag == "identity") {
    for (std::size_t i = 0; i < grid.size(); ++i) put_diag(i, Point{1, 1, 1});
  } else if (tag == "diag") {
    const Point d = vec(spec, "values", n, path);
    for (std::size_t i = 0; i < grid.size(); ++i) put_diag(i, d);
  } else if (tag == "matrix") {
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) e[i * n * n + r * n + c] = spec["entries"][r][c].get<double>();
  } else if (tag == "checkerboard") {
    const Point a = vec(spec, "a", n, path);
    const Point b = vec(spec, "b", n, path);
    const int tiles = static_cast<int>(num(spec, "tiles", path, 0.0));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      int parity = 0;
      if (tiles == 0) {
        const Index ijk = grid.multi(i);
        for (int d = 0; d < n; ++d) parity += ijk[d];
      } else {
        const Point x = grid.coord(i);
        for (int d = 0; d < n; ++d) {
          const double f = (x[d] - grid.lower(d)) / (grid.upper(d) - grid.lower(d));
          parity += std::min(tiles - 1, static_cast<int>(std::floor(f * tiles)));
        }
      }
      put_diag(i, parity % 2 == 0 ? a : b);
    }
  } else {  // random
    std::mt19937_64 rng(static_cast<std::uint64_t>(num(spec, "seed", path, 0.0)));
    const double lo = mu * (1.0 + 1e-6);
    const double hi = (1.0 / mu) * (1.0 - 1e-6);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      Eigen::MatrixXd g(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) g(r, c) = 2.0 * unit(rng) - 1.0;
      const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
      Eigen::VectorXd ev(n);
      for (int k = 0; k < n; ++k) ev(k) = lo + (hi - lo) * unit(rng);
      const Eigen::MatrixXd m = q * ev.asDiagonal() * q.transpose();
      for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c) {
          e[i * n * n + r * n + c] = m(r, c);
          e[i * n * n + c * n + r] = m(r, c);
        }
    }
  }
  try {
    return CoefficientField(grid, std::move(e), mu);
  } catch (const Error& err) {
    throw ConfigError(path, err.what());
  }
}

}  // namespace fbs
