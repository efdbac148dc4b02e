#include <doctest.h>

#include <cmath>
#include <random>

#include "fbs/catalog.hpp"
#include "fbs/energy.hpp"
#include "fbs/error.hpp"
#include "oracles.hpp"

using namespace fbs;

namespace {

struct Problem {
  ScalarField u;
  CoefficientField a;
  ForcingField lam;
  ExponentField gam;
};

Problem constant_data(const ScalarField& u, double lam, double gam, double cap = 2.0) {
  const Grid& g = u.grid();
  return {u, CoefficientField::identity(g), ForcingField(g, std::vector<double>(g.size(), lam), std::max(lam, 1.0)),
          ExponentField(g, std::vector<double>(g.size(), gam), cap)};
}

Problem random_problem(int dim, int nodes, std::uint64_t seed) {
  const Grid g = Grid::box(dim, nodes);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> u(g.size()), l(g.size()), y(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    u[i] = U(rng) < 0.3 ? 0.0 : U(rng);
    l[i] = U(rng);
    y[i] = 1.9 * U(rng);
  }
  return {ScalarField(g, u), oracle::random_spd(g, 0.3, seed + 1), ForcingField(g, l, 1.0), ExponentField(g, y, 1.9)};
}

}  // namespace

TEST_CASE("zero field has zero energy") {
  const Problem p = constant_data(ScalarField::constant(Grid::box(2, 9), 0.0), 1.0, 0.5);
  const EnergyBreakdown e = energy(p.u, p.a, p.lam, p.gam);
  CHECK(e.dirichlet == 0.0);
  CHECK(e.singular == 0.0);
  CHECK(e.total == 0.0);
}

TEST_CASE("affine field on [0,1]") {
  const Grid g(1, {17, 1, 1}, {0, 0, 0}, {1, 0, 0});
  const Problem p = constant_data(sample_scalar({{"type", "affine"}, {"slope", {1.0}}}, g), 0.0, 1.0);
  const EnergyBreakdown e = energy(p.u, p.a, p.lam, p.gam);
  CHECK(e.dirichlet == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e.singular == 0.0);
}

TEST_CASE("constant positive field on [0,1]") {
  const Grid g(1, {9, 1, 1}, {0, 0, 0}, {1, 0, 0});
  const double c = 0.375;
  const Problem p = constant_data(ScalarField::constant(g, c), 1.0, 1.0);
  const EnergyBreakdown e = energy(p.u, p.a, p.lam, p.gam);
  CHECK(e.dirichlet == 0.0);
  CHECK(e.singular == c);
  CHECK(e.total == c);
}

TEST_CASE("energy matches the quadrature oracle") {
  for (int dim : {1, 2, 3}) {
    const int nodes = dim == 1 ? 33 : (dim == 2 ? 17 : 7);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const Problem p = random_problem(dim, nodes, seed * 11 + dim);
      const EnergyBreakdown e = energy(p.u, p.a, p.lam, p.gam);
      const auto ref = oracle::energy(p.u, p.a, p.lam, p.gam);
      CHECK(std::abs(e.dirichlet - ref[0]) <= 1e-12 * std::max(1.0, ref[0]));
      CHECK(std::abs(e.singular - ref[1]) <= 1e-12 * std::max(1.0, ref[1]));
    }
  }
}

TEST_CASE("serial and parallel energies agree bit for bit") {
  const Problem p = random_problem(2, 65, 5);
  const EnergyBreakdown a = energy(p.u, p.a, p.lam, p.gam);
  const EnergyBreakdown b = energy_serial(p.u, p.a, p.lam, p.gam);
  CHECK(a.dirichlet == b.dirichlet);
  CHECK(a.singular == b.singular);
}

TEST_CASE("ball region is part of the whole") {
  const Problem p = random_problem(2, 33, 9);
  const Ball b{{0.1, -0.2, 0}, 0.45};
  const EnergyBreakdown inside = energy(p.u, p.a, p.lam, p.gam, Region::of(b));
  const EnergyBreakdown whole = energy(p.u, p.a, p.lam, p.gam);
  CHECK(inside.dirichlet > 0.0);
  CHECK(inside.dirichlet < whole.dirichlet);
  CHECK(inside.singular < whole.singular);
}

TEST_CASE("dirichlet part ignores a constant shift when lambda vanishes") {
  const Problem p = random_problem(2, 17, 3);
  const ForcingField zero(p.u.grid(), std::vector<double>(p.u.size(), 0.0), 1.0);
  std::vector<double> base = p.u.values(), moved = p.u.values();
  for (double& v : base) v += 1.0;
  for (double& v : moved) v += 2.5;
  const EnergyBreakdown e0 = energy(ScalarField(p.u.grid(), base), p.a, zero, p.gam);
  const EnergyBreakdown e1 = energy(ScalarField(p.u.grid(), moved), p.a, zero, p.gam);
  CHECK(e1.total == doctest::Approx(e0.total).epsilon(1e-13));
  CHECK(e0.singular == 0.0);
}

TEST_CASE("scale_local identity parameters are bit exact") {
  const Problem p = random_problem(2, 17, 4);
  const ScaledProblem s = scale_local(p.u, p.a, p.lam, p.gam, Point{0, 0, 0}, 1.0, 1.0);
  CHECK(s.v.values() == p.u.values());
  CHECK(s.a.entries() == p.a.entries());
  CHECK(s.lambda.values() == p.lam.values());
  CHECK(s.gamma.values() == p.gam.values());
}

TEST_CASE("scale_local lambda for gamma = 1") {
  const Grid g = Grid::box(2, 17);
  const Problem p = constant_data(ScalarField::constant(g, 0.5), 0.7, 1.0);
  const ScaledProblem s = scale_local(p.u, p.a, p.lam, p.gam, Point{0, 0, 0}, 0.5, 0.25);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(s.lambda[i] == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("scale_local energy identity on nested grids") {
  // rho = 1/2 and a target grid with twice the spacing make the resampling exact
  for (int dim : {1, 2}) {
    const Grid coarse = Grid::box(dim, 17);
    const Problem p = random_problem(dim, 33, 21 + dim);
    const double rho = 0.5, mu = 0.3;
    const Ball b{Point{0, 0, 0}, rho};
    const EnergyBreakdown left = energy(p.u, p.a, p.lam, p.gam, Region::of(b));
    const ScaledProblem s = scale_local(p.u, p.a, p.lam, p.gam, Point{0, 0, 0}, rho, mu, coarse);
    const EnergyBreakdown right = energy(s.v, s.a, s.lambda, s.gamma, Region::of(Ball{Point{0, 0, 0}, 1.0}));
    const double factor = mu * mu * std::pow(rho, dim - 2);
    CHECK(s.interpolation_bound >= 0.0);
    CHECK(left.total == doctest::Approx(factor * right.total).epsilon(1e-12));
  }
}

TEST_CASE("rescale_growth exponents") {
  const Grid g = Grid::box(1, 33);
  const Problem p = constant_data(sample_scalar({{"type", "radial"}, {"power", 2.0}}, g), 0.8, 1.0);

  const ScaledProblem two = rescale_growth(p.u, p.a, p.lam, p.gam, 0.5, 2.0);
  CHECK(two.admissible);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(two.lambda[i] == doctest::Approx(0.8).epsilon(1e-15));

  const ScaledProblem three = rescale_growth(p.u, p.a, p.lam, p.gam, 0.5, 3.0);
  CHECK_FALSE(three.admissible);
  CHECK(three.lambda_sup == doctest::Approx(0.8 / 0.5).epsilon(1e-14));

  const ScaledProblem ident = rescale_growth(p.u, p.a, p.lam, p.gam, 1.0, 1.5);
  CHECK(ident.v.values() == p.u.values());
  CHECK(ident.lambda.values() == p.lam.values());
  CHECK(ident.admissible);

  // r^{gamma beta - 2 beta + 2} for constant gamma
  const Problem q = constant_data(ScalarField::constant(g, 1.0), 0.5, 0.75);
  const double r = 0.25, beta = 1.4;
  const ScaledProblem e = rescale_growth(q.u, q.a, q.lam, q.gam, r, beta);
  CHECK(e.lambda[16] == doctest::Approx(0.5 * std::pow(r, 0.75 * beta - 2.0 * beta + 2.0)).epsilon(1e-15));
}

TEST_CASE("scaling preconditions") {
  const Problem p = random_problem(1, 17, 2);
  CHECK_THROWS_AS(scale_local(p.u, p.a, p.lam, p.gam, Point{0.8, 0, 0}, 0.5, 1.0), Error);
  CHECK_THROWS_AS(scale_local(p.u, p.a, p.lam, p.gam, Point{0, 0, 0}, 0.5, 0.0), Error);
  CHECK_THROWS_AS(rescale_growth(p.u, p.a, p.lam, p.gam, 1.5, 2.0), Error);
}
