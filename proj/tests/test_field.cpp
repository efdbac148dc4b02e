#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fbs/catalog.hpp"
#include "fbs/error.hpp"
#include "fbs/field_io.hpp"
#include "fbs/fields.hpp"
#include "fbs/modulus.hpp"

using namespace fbs;

TEST_CASE("const spec gives zeros") {
  const Grid g = Grid::box(2, 9);
  const ScalarField f = sample_scalar({{"type", "const"}, {"value", 0.0}}, g);
  for (double v : f.values()) CHECK(v == 0.0);
}

TEST_CASE("radial |x| on five nodes") {
  const Grid g = Grid::box(1, 5);
  const ScalarField f = sample_scalar({{"type", "radial"}, {"power", 1.0}}, g);
  const double expect[5] = {1.0, 0.5, 0.0, 0.5, 1.0};
  for (int i = 0; i < 5; ++i) CHECK(f[i] == doctest::Approx(expect[i]).epsilon(1e-15));
}

TEST_CASE("|x|^0.5 matches a direct evaluation") {
  const Grid g = Grid::box(1, 65);
  const ScalarField f = sample_scalar({{"type", "radial"}, {"power", 0.5}}, g);
  for (int i = 0; i < 65; ++i) {
    const double x = -1.0 + 2.0 * i / 64.0;
    CHECK(std::abs(f[i] - std::sqrt(std::abs(x))) <= 1e-14);
  }
}

TEST_CASE("catalog errors name the path") {
  const Grid g = Grid::box(1, 5);
  try {
    sample_scalar({{"type", "spline"}}, g, "fields.phi");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "fields.phi");
  }
  CHECK_THROWS_AS(sample_exponent({{"type", "const"}, {"value", 1.5}}, g, 1.0), ConfigError);
  CHECK_THROWS_AS(sample_forcing({{"type", "const"}, {"value", -0.1}}, g, 1.0), ConfigError);
}

TEST_CASE("sum and bump specs") {
  const Grid g = Grid::box(1, 9);
  const json spec = {{"type", "sum"},
                     {"terms", {{{"type", "const"}, {"value", 1.0}}, {{"type", "affine"}, {"slope", {2.0}}}}}};
  const ScalarField f = sample_scalar(spec, g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(f[i] == doctest::Approx(1.0 + 2.0 * g.coord(i)[0]));
  const ScalarField b = sample_scalar({{"type", "bump"}, {"radius", 0.5}, {"height", 2.0}}, g);
  CHECK(b[4] == doctest::Approx(2.0));
  CHECK(b[0] == 0.0);
}

TEST_CASE("exponent and forcing bounds are enforced, not clamped") {
  const Grid g = Grid::box(1, 5);
  CHECK_THROWS_AS(ExponentField(g, std::vector<double>(5, 2.5), 2.0), Error);
  CHECK_THROWS_AS(ExponentField(g, std::vector<double>(5, -0.1), 2.0), Error);
  CHECK_THROWS_AS(ForcingField(g, std::vector<double>(5, 1.5), 1.0), Error);
  const Grid g3 = Grid::box(3, 3);
  CHECK_THROWS_AS(ExponentField(g3, std::vector<double>(27, 1.0), 6.0), Error);
  CHECK_NOTHROW(ExponentField(g3, std::vector<double>(27, 1.0), 5.9));
  CHECK(std::isinf(sobolev_cap(2)));
  CHECK(sobolev_cap(3) == 6.0);
}

TEST_CASE("identity coefficient passes for every mu") {
  const Grid g = Grid::box(2, 5);
  for (double mu : {0.1, 0.5, 1.0}) {
    const CoefficientDiagnostics d = validate_coefficient(CoefficientField::identity(g, mu));
    CHECK(d.passed);
    CHECK(d.min_eigenvalue == 1.0);
    CHECK(d.max_eigenvalue == 1.0);
  }
}

TEST_CASE("diag(0.5, 2) sits on both window ends") {
  const Grid g = Grid::box(2, 5);
  const CoefficientField a = sample_coefficient({{"type", "diag"}, {"values", {0.5, 2.0}}}, g, 0.5);
  const CoefficientDiagnostics d = validate_coefficient(a);
  CHECK(d.passed);
  CHECK(d.min_eigenvalue == 0.5);
  CHECK(d.max_eigenvalue == 2.0);
}

TEST_CASE("checkerboard window") {
  const Grid g = Grid::box(2, 8);
  const json spec = {{"type", "checkerboard"}, {"a", {0.5, 2.0}}, {"b", {2.0, 0.5}}};
  const CoefficientField a = sample_coefficient(spec, g, 0.5);
  // per-node eigenvalues computed directly: the matrices are diagonal
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double l0 = a.entry(i, 0, 0), l1 = a.entry(i, 1, 1);
    CHECK(std::min(l0, l1) == 0.5);
    CHECK(std::max(l0, l1) == 2.0);
    CHECK(a.entry(i, 0, 1) == 0.0);
  }
  CHECK(validate_coefficient(a).passed);

  const CoefficientField tight(g, a.entries(), 0.6);
  const CoefficientDiagnostics d = validate_coefficient(tight);
  CHECK_FALSE(d.passed);
  CHECK(d.witness_node < g.size());
  CHECK((d.witness_value == 0.5 || d.witness_value == 2.0));
}

TEST_CASE("asymmetric matrix is reported") {
  const Grid g = Grid::box(2, 3);
  std::vector<double> e;
  for (std::size_t i = 0; i < g.size(); ++i) e.insert(e.end(), {1.0, 0.0, 0.0, 1.0});
  e[4 * 4 + 1] = 0.1;
  const CoefficientDiagnostics d = validate_coefficient(CoefficientField(g, e, 0.5));
  CHECK_FALSE(d.passed);
  CHECK(d.witness_node == 4);
  CHECK(d.symmetry_defect == doctest::Approx(0.1));
}

TEST_CASE("random coefficient is admissible") {
  const Grid g = Grid::box(3, 5);
  const CoefficientField a = sample_coefficient({{"type", "random"}, {"seed", 3}}, g, 0.4);
  CHECK(validate_coefficient(a).passed);
}

TEST_CASE("dini sums of the standard moduli") {
  const DiniCheck lin = dini_check(ModulusOfContinuity::linear(1.0), 256, 1e6);
  CHECK(lin.dini);
  CHECK(std::abs(lin.partial_sum - 1.0) <= 1e-10);

  const DiniCheck sq = dini_check(ModulusOfContinuity::power(0.5), 256, 1e6);
  CHECK(sq.dini);
  CHECK(std::abs(sq.partial_sum - 1.0 / (std::sqrt(2.0) - 1.0)) <= 1e-10);

  // omega(2^-k) = 1/(1 + k ln 2) >= 1/(2k) once k >= 1, so S_K >= H_K / 2
  const DiniCheck lg = dini_check(ModulusOfContinuity::log_type(), 64, 1e6);
  CHECK_FALSE(lg.dini);
  double harmonic = 0.0;
  for (int k = 1; k <= lg.terms; ++k) {
    harmonic += 1.0 / k;
    CHECK(lg.partial_sums[k - 1] >= 0.5 * harmonic);
  }
  const DiniCheck capped = dini_check(ModulusOfContinuity::log_type(), 100000, 5.0);
  CHECK(capped.status == DiniStatus::Diverged);

  for (std::size_t k = 1; k < sq.partial_sums.size(); ++k) CHECK(sq.partial_sums[k] >= sq.partial_sums[k - 1]);
}

TEST_CASE("modulus inverse agrees with bisection") {
  const ModulusOfContinuity ms[] = {ModulusOfContinuity::linear(2.0), ModulusOfContinuity::power(0.5, 1.5),
                                    ModulusOfContinuity::log_type(0.8),
                                    ModulusOfContinuity::tabulated({0.0, 0.5, 1.0}, {0.0, 0.2, 1.0})};
  for (const auto& m : ms)
    for (double nu : {0.05, 0.1, 0.3}) {
      const double t = m.inverse(nu);
      CHECK(m(t) >= nu * (1.0 - 1e-10));
      CHECK(m(t) <= nu * (1.0 + 1e-10));
      CHECK(t == doctest::Approx(m.inverse_bisect(nu, 0.0, 2.0)).epsilon(1e-9));
    }
  CHECK(ModulusOfContinuity::linear(4.0).inverse(0.5) == 0.125);
  CHECK(std::isinf(ModulusOfContinuity::zero().inverse(0.1)));
}

TEST_CASE("tabulated modulus is validated") {
  CHECK_THROWS(ModulusOfContinuity::tabulated({0.0, 0.5}, {0.1, 0.2}));
  CHECK_THROWS(ModulusOfContinuity::tabulated({0.0, 0.5, 0.4}, {0.0, 0.2, 0.3}));
  CHECK_THROWS(ModulusOfContinuity::tabulated({0.0, 0.5, 1.0}, {0.0, 0.3, 0.2}));
  const auto flat = ModulusOfContinuity::tabulated({0.0, 0.5, 1.0, 1.5}, {0.0, 0.2, 0.2, 0.4});
  CHECK(flat.inverse(0.2) == doctest::Approx(0.5));
}

TEST_CASE("field dump round trip") {
  const Grid g(2, {5, 4, 1}, {-1, 0, 0}, {1, 3, 0});
  const ScalarField f = sample_scalar({{"type", "random"}, {"seed", 7}, {"low", -1.0}, {"high", 1.0}}, g);
  std::stringstream ss;
  write_field(ss, g, f.values());
  const FieldDump back = read_field(ss);
  CHECK(back.grid == g);
  CHECK(back.values == f.values());
}
