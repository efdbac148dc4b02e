// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   fbs_acceptance <path to fbslab> <scratch dir>

#include <omp.h>

#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fbs/catalog.hpp"
#include "fbs/elliptic.hpp"
#include "fbs/energy.hpp"
#include "fbs/estimators.hpp"
#include "fbs/minimize.hpp"
#include "fbs/modulus.hpp"
#include "oracles.hpp"

using namespace fbs;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

// ---- shared 1D profile solves ------------------------------------------------

struct ProfileSolve {
  double gamma = 0.0;
  int nodes = 0;
  double h = 0.0;
  ScalarField u;
  CoefficientField a;
  ExponentField gam;
  double error = 0.0;
  int start = 0;  // 0: affine interior, 1: exact profile interior
  bool converged = false;
};

double profile_coefficient(double gamma) { return std::pow((2.0 - gamma) * (2.0 - gamma) / 4.0, 1.0 / (2.0 - gamma)); }

double profile(double gamma, double x) {
  return profile_coefficient(gamma) * std::pow(std::max(x, 0.0), 2.0 / (2.0 - gamma));
}

// Two initial iterates sharing the boundary values; the lower final energy wins.
ProfileSolve solve_profile(double gamma, int nodes) {
  const Grid g = Grid::box(1, nodes);
  std::vector<double> exact(g.size()), affine(g.size());
  const double right = profile(gamma, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.coord(i)[0];
    exact[i] = profile(gamma, x);
    affine[i] = 0.5 * (1.0 + x) * right;
  }
  const CoefficientField a = CoefficientField::identity(g);
  const ForcingField lam(g, std::vector<double>(g.size(), 1.0), 1.0);
  const ExponentField gam(g, std::vector<double>(g.size(), gamma), 1.9);
  MinimizeOptions o;
  o.relaxation = 2.0 / (1.0 + std::sin(M_PI / nodes));
  o.tol_energy = 1e-15;
  o.tol_node = 1e-15;
  const MinimizeResult from_affine = minimize(ScalarField(g, affine), a, lam, gam, o);
  const MinimizeResult from_exact = minimize(ScalarField(g, exact), a, lam, gam, o);
  const bool pick_exact = from_exact.report.final_energy.total < from_affine.report.final_energy.total;
  const MinimizeResult& r = pick_exact ? from_exact : from_affine;
  ProfileSolve s{gamma, nodes, g.mesh_size(), r.u, a, gam};
  for (std::size_t i = 0; i < g.size(); ++i) s.error = std::max(s.error, std::abs(r.u[i] - exact[i]));
  s.start = pick_exact ? 1 : 0;
  s.converged = r.report.converged;
  return s;
}

struct Profiles {
  std::vector<ProfileSolve> coarse, fine;  // h = 2/256 and 2/512
};

const Profiles& profiles() {
  static const Profiles p = [] {
    Profiles out;
    for (double gamma : {0.5, 1.0, 1.5}) {
      out.coarse.push_back(solve_profile(gamma, 257));
      out.fine.push_back(solve_profile(gamma, 513));
    }
    return out;
  }();
  return p;
}

// ---- criteria ----------------------------------------------------------------

Outcome profile_reproduction() {
  Outcome o;
  const Profiles& p = profiles();
  for (std::size_t k = 0; k < p.coarse.size(); ++k) {
    const ProfileSolve& c = p.coarse[k];
    const ProfileSolve& f = p.fine[k];
    const double ratio = f.error / c.error;
    const bool at_roundoff = c.error <= 1e-12 && f.error <= 1e-12;
    o.require(c.converged && f.converged, "gamma " + fmt(c.gamma) + " converged");
    o.require(c.error <= 0.02, "gamma " + fmt(c.gamma) + " err(h) " + fmt(c.error) + " <= 0.02");
    o.require(at_roundoff || ratio <= 0.65,
              "err(h/2)/err(h) " + (at_roundoff ? std::string("at roundoff") : fmt(ratio)) + " <= 0.65" +
                  (c.start || f.start ? " [profile start]" : " [affine start]"));
  }
  return o;
}

GrowthOptions growth_options() {
  GrowthOptions go;
  go.k_min = 2;
  go.floor = 1e-11;
  go.min_radius_cells = 4.0;
  return go;
}

Outcome growth_exponent() {
  Outcome o;
  const Profiles& p = profiles();
  for (const auto* set : {&p.coarse, &p.fine})
    for (const ProfileSolve& s : *set) {
      const DyadicTrace t = dyadic_sup_trace(s.u, Point{0, 0, 0}, max_dyadic_level(s.u.grid()));
      const GrowthFit f = fit_growth_exponent(t, s.gamma, growth_options(), s.h);
      const auto checks = dyadic_ratio_checks(t, f.target_beta, s.h, 1e-11);
      std::size_t held = 0;
      for (const auto& c : checks) held += c.holds;
      o.require(f.relative_gap <= 0.08, "N=" + std::to_string(s.nodes) + " gamma " + fmt(s.gamma) + " beta_hat " +
                                            fmt(f.beta_hat) + " vs " + fmt(f.target_beta));
      o.require(!checks.empty() && held == checks.size(),
                "ratios " + std::to_string(held) + "/" + std::to_string(checks.size()));
    }
  return o;
}

Outcome dyadic_constant() {
  Outcome o;
  const Profiles& p = profiles();
  for (const auto* set : {&p.coarse, &p.fine}) {
    const ProfileSolve& s = (*set)[1];  // gamma(0) = 1
    const DyadicTrace t = dyadic_sup_trace(s.u, Point{0, 0, 0}, max_dyadic_level(s.u.grid()));
    const GrowthFit f = fit_growth_exponent(t, 1.0, growth_options(), s.h);
    double worst = 0.0;
    int pairs = 0;
    for (const auto& e : t.entries) {
      if (e.k < f.window_k_min || e.k >= f.window_k_max) continue;
      worst = std::max(worst, t.entries[e.k].sup / e.sup);
      ++pairs;
    }
    o.require(pairs > 0 && worst <= 0.25 * 1.1, "N=" + std::to_string(s.nodes) + " max ratio " + fmt(worst) +
                                                     " over k=" + std::to_string(f.window_k_min) + ".." +
                                                     std::to_string(f.window_k_max));
  }
  return o;
}

Outcome dini_sums() {
  Outcome o;
  const DiniCheck lin = dini_check(ModulusOfContinuity::linear(1.0), 256, 1e6);
  const DiniCheck sq = dini_check(ModulusOfContinuity::power(0.5), 256, 1e6);
  const DiniCheck lg = dini_check(ModulusOfContinuity::log_type(), 64, 1e6);
  const double s2 = 1.0 / (std::sqrt(2.0) - 1.0);
  o.require(lin.dini && std::abs(lin.partial_sum - 1.0) <= 1e-10, "t: " + fmt(std::abs(lin.partial_sum - 1.0)));
  o.require(sq.dini && std::abs(sq.partial_sum - s2) <= 1e-10, "sqrt t: " + fmt(std::abs(sq.partial_sum - s2)));
  o.require(!lg.dini, std::string("log: ") + to_string(lg.status) + " at 64 terms");
  return o;
}

Outcome harmonic_replacement_checks() {
  Outcome o;
  const Grid g = Grid::box(2, 17);
  const Ball ball{{0, 0, 0}, 0.9};
  double lu = 0.0, mp = 0.0, fixed = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ScalarField u = sample_scalar({{"type", "random"}, {"seed", seed}, {"low", -1.0}, {"high", 1.0}}, g);
    const CoefficientField a = oracle::random_spd(g, 0.25, 1000 + seed);
    const ReplacementResult r = harmonic_replacement(u, a, ball);
    const auto ref = oracle::dense_replacement(u, a, replacement_unknowns(g, ball));
    for (std::size_t i = 0; i < g.size(); ++i) lu = std::max(lu, std::abs(r.h[i] - ref[i]));
  }
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const Grid gi = Grid::box(2, 17 + 2 * static_cast<int>(seed % 5));
    const ScalarField u = sample_scalar({{"type", "random"}, {"seed", seed}, {"low", -2.0}, {"high", 3.0}}, gi);
    const CoefficientField a =
        seed % 2 ? oracle::random_spd(gi, 0.2, 5000 + seed)
                 : sample_coefficient({{"type", "checkerboard"}, {"a", {0.2, 5.0}}, {"b", {5.0, 0.2}}}, gi, 0.2);
    const Ball b{{0.4 * U(rng) - 0.2, 0.4 * U(rng) - 0.2, 0}, 0.5 + 0.3 * U(rng)};
    const ReplacementResult r = harmonic_replacement(u, a, b);
    mp = std::max(mp, r.max_principle_violation);
    if (seed <= 10) {
      const ReplacementResult again = harmonic_replacement(r.h, a, b);
      for (std::size_t i = 0; i < gi.size(); ++i) fixed = std::max(fixed, std::abs(again.h[i] - r.h[i]));
    }
  }
  o.require(lu <= 1e-8, "dense LU max diff " + fmt(lu) + " over 10 seeds");
  o.require(mp <= 1e-12, "max-principle violation " + fmt(mp) + " over 100 instances");
  o.require(fixed <= 1e-8, "R(R(u)) - R(u) " + fmt(fixed));
  return o;
}

Outcome deficit_linearity() {
  Outcome o;
  const Grid g = Grid::box(2, 65);
  const ScalarField phi =
      sample_scalar({{"type", "positive_part_power"}, {"direction", {1.0, 0.0}}, {"power", 1.0}, {"scale", 0.05}}, g);
  const CoefficientField a = CoefficientField::identity(g);
  const ExponentField gam(g, std::vector<double>(g.size(), 1.5), 1.9);
  const Ball ball{{0, 0, 0}, 0.5};
  MinimizeOptions mo;
  mo.relaxation = 1.9;
  mo.tol_energy = 1e-14;
  std::vector<double> ratio;
  for (double s : {0.25, 0.5, 1.0}) {
    const ForcingField lam(g, std::vector<double>(g.size(), s), 1.0);
    const MinimizeResult r = minimize(phi, a, lam, gam, mo);
    const ReplacementResult h = harmonic_replacement(r.u, a, ball);
    ratio.push_back(replacement_deficit(r.u, h.h, ball) / s);
  }
  const double mean = (ratio[0] + ratio[1] + ratio[2]) / 3.0;
  double dev = 0.0;
  for (double r : ratio) dev = std::max(dev, std::abs(r / mean - 1.0));
  o.require(mean > 0.0 && dev <= 0.25, "deficit/s = " + fmt(ratio[0]) + ", " + fmt(ratio[1]) + ", " + fmt(ratio[2]) +
                                           " (max deviation " + fmt(100 * dev) + "% of mean)");
  return o;
}

Outcome truncation_minimality() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double low = 0.0, excess = -1e300, worst = 1e300;
  int violations = 0;
  bool monotone = true;
  for (int inst = 0; inst < 50; ++inst) {
    const int nodes = 9 + 2 * (inst % 4);
    const Grid g = Grid::box(2, nodes);
    const std::uint64_t s = 100 + inst;
    const double amp = 0.1 + U(rng);
    const ScalarField phi = sample_scalar({{"type", "random"}, {"seed", s}, {"low", 0.0}, {"high", amp}}, g);
    const CoefficientField a = oracle::random_spd(g, 0.3, s * 7);
    const ForcingField lam = sample_forcing({{"type", "random"}, {"seed", s + 1}, {"low", 0.0}, {"high", 1.0}}, g, 1.0);
    const ExponentField gam = sample_exponent({{"type", "random"}, {"seed", s + 2}, {"low", 0.0}, {"high", 1.9}}, g, 1.9);
    MinimizeOptions mo;
    mo.seed = s;
    mo.shuffle = inst % 2 == 1;
    const MinimizeResult r = minimize(phi, a, lam, gam, mo);
    low = std::min(low, r.u.min());
    excess = std::max(excess, r.u.max() - phi.boundary_sup());
    const auto& tr = r.report.energy_trace;
    for (std::size_t k = 1; k < tr.size(); ++k) monotone = monotone && tr[k] <= tr[k - 1];
    const CompetitorReport c = sample_competitors(r.u, a, lam, gam, 100, s, 1e-10);
    violations += c.violations;
    worst = std::min(worst, c.worst_margin);
  }
  o.require(low >= -1e-10, "min u " + fmt(low));
  o.require(excess <= 1e-10, "max u - |phi|_inf " + fmt(excess));
  o.require(violations == 0, std::to_string(violations) + " competitor violations, worst margin " + fmt(worst));
  o.require(monotone, "energy traces non-increasing");
  return o;
}

Outcome subharmonicity() {
  Outcome o;
  const Profiles& p = profiles();
  for (std::size_t k = 0; k < p.coarse.size(); ++k) {
    double C[2];
    for (int lev = 0; lev < 2; ++lev) {
      const ProfileSolve& s = lev == 0 ? p.coarse[k] : p.fine[k];
      const SubharmonicResidual r = subharmonic_residual(s.u, s.a);
      C[lev] = std::max(0.0, -r.min_value) / s.h;
    }
    // both zero counts as stable; otherwise the refined constant must stay within 50%
    const bool stable = (C[0] == 0.0 && C[1] == 0.0) || (C[0] > 0.0 && std::abs(C[1] / C[0] - 1.0) <= 0.5);
    o.require(stable, "gamma " + fmt(p.coarse[k].gamma) + " C = " + fmt(C[0]) + " -> " + fmt(C[1]));
  }
  return o;
}

Outcome holder_fit() {
  Outcome o;
  const Grid g = Grid::box(1, 1025);
  const std::vector<double> radii{1.0, 0.5, 0.25, 0.125};
  for (double alpha : {0.25, 0.5, 0.75, 1.0}) {
    const ScalarField u = sample_scalar({{"type", "radial"}, {"power", alpha}}, g);
    const HolderFit f = campanato_fit(u, Point{0, 0, 0}, radii);
    o.require(std::abs(f.epsilon_hat - alpha) <= 0.05, "alpha " + fmt(alpha) + " -> " + fmt(f.epsilon_hat));
  }
  return o;
}

Outcome repelling() {
  Outcome o;
  const Grid g = Grid::box(2, 65);
  const ForcingField lam(g, std::vector<double>(g.size(), 1.0), 1.0);
  const double L = 10.0;  // bounds the gradient of the gamma bump below (2 * 2.17 / 0.45)
  const ModulusOfContinuity omega = ModulusOfContinuity::linear(L);
  double gmax = -1.0, dmin = 1e300;
  std::size_t zeros_min = g.size();
  bool bound_exact = true, satisfied = true;
  for (int coef = 0; coef < 2; ++coef)
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> U(0.0, 1.0);
      const double th = 2.0 * M_PI * U(rng);
      const double amp = 0.2 + 0.2 * U(rng);
      const double c = std::cos(th), s = std::sin(th);
      const Point x0{-0.4 * c, -0.4 * s, 0};
      const ScalarField phi = sample_scalar({{"type", "positive_part_power"},
                                             {"direction", {c, s}},
                                             {"shift", -0.1},
                                             {"power", 1.0},
                                             {"scale", amp}},
                                            g);
      const ExponentField gam = sample_exponent(
          {{"type", "bump"}, {"center", {x0[0], x0[1]}}, {"radius", 0.45}, {"height", 2.0}, {"base", 1.0}}, g, 3.0);
      const CoefficientField a =
          coef == 0 ? CoefficientField::identity(g, 0.5)
                    : sample_coefficient({{"type", "checkerboard"}, {"a", {0.5, 2.0}}, {"b", {2.0, 0.5}}, {"tiles", 8}},
                                         g, 0.5);
      MinimizeOptions mo;
      mo.relaxation = 1.9;
      const MinimizeResult r = minimize(phi, a, lam, gam, mo);
      const FreeBoundary fb = extract_free_boundary(r.u, 1e-11);
      std::size_t zeros = 0;
      for (unsigned char p : fb.positive) zeros += !p;
      zeros_min = std::min(zeros_min, zeros);
      gmax = std::max(gmax, max_gamma_on_boundary(fb, gam));
      const RepellingReport rep = repelling_distance(r.u, gam, omega, x0, fb);
      bound_exact = bound_exact && rep.applicable && rep.bound == rep.nu / L;
      satisfied = satisfied && rep.satisfied;
      dmin = std::min(dmin, rep.distance);
    }
  o.require(zeros_min > 0, "smallest zero set " + std::to_string(zeros_min) + " nodes");
  o.require(gmax < 2.25, "max gamma on the free boundary " + fmt(gmax));
  o.require(bound_exact, "bound == nu / L");
  o.require(satisfied, "distance from the gamma peak " + fmt(dmin) + " >= bound - 2h");
  return o;
}

Outcome scaling_identities() {
  Outcome o;
  const Grid g = Grid::box(2, 129);
  const CoefficientField a = sample_coefficient({{"type", "matrix"}, {"entries", {{1.2, 0.3}, {0.3, 0.8}}}}, g, 0.5);
  const ForcingField lam = sample_forcing(
      {{"type", "bump"}, {"center", {0.1, 0.0}}, {"radius", 1.5}, {"height", 0.8}, {"base", 0.2}}, g, 1.0);
  const ExponentField gam = sample_exponent({{"type", "affine"}, {"offset", 0.8}, {"slope", {0.2, 0.1}}}, g, 1.9);
  const ScalarField phi =
      sample_scalar({{"type", "positive_part_power"}, {"direction", {0.8, 0.6}}, {"power", 1.0}, {"scale", 0.4}}, g);
  MinimizeOptions mo;
  mo.relaxation = 1.9;
  const MinimizeResult r = minimize(phi, a, lam, gam, mo);
  double worst = 0.0;
  for (double rho : {0.25, 0.5})
    for (const Point& x0 : {Point{0, 0, 0}, Point{0.2, -0.1, 0}, Point{0.3, 0.25, 0}}) {
      double mu = 0.0;
      for (std::size_t i : ball_nodes(g, Ball{x0, rho})) mu = std::max(mu, r.u[i]);
      const double left = energy(r.u, a, lam, gam, Region::of(Ball{x0, rho})).total;
      const ScaledProblem s = scale_local(r.u, a, lam, gam, x0, rho, mu);
      const double right = energy(s.v, s.a, s.lambda, s.gamma, Region::of(Ball{{0, 0, 0}, 1.0})).total;
      worst = std::max(worst, std::abs(mu * mu * std::pow(rho, g.dim() - 2) * right / left - 1.0));
    }
  o.require(worst <= 0.02, "energy identity max relative gap " + fmt(worst) + " over 6 balls");

  // admissibility table: constant gamma, the flag against the sign of gamma beta - 2 (beta - 1)
  const Grid g1 = Grid::box(1, 33);
  const ScalarField u1 = sample_scalar({{"type", "radial"}, {"power", 2.0}}, g1);
  const CoefficientField a1 = CoefficientField::identity(g1);
  const ForcingField l1(g1, std::vector<double>(g1.size(), 1.0), 1.0);
  int agree = 0;
  const double gammas[5] = {0.0, 0.5, 1.0, 1.5, 1.9};
  const double betas[4] = {1.2, 2.0, 3.0, 8.0};
  for (double gv : gammas)
    for (double beta : betas) {
      const ExponentField ge(g1, std::vector<double>(g1.size(), gv), 1.9);
      const ScaledProblem s = rescale_growth(u1, a1, l1, ge, 0.5, beta);
      const bool sign_ok = gv * beta - 2.0 * (beta - 1.0) >= 0.0;
      agree += s.admissible == sign_ok;
    }
  o.require(agree == 20, std::to_string(agree) + "/20 admissibility flags match");
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Outcome determinism(const std::string& fbslab, const fs::path& work) {
  Outcome o;
  const std::string config = std::string(FBS_CONFIG_DIR) + "/solve_2d.json";
  // same output path both times, since config.json records it
  const fs::path bundle = work / "det";
  const std::vector<fs::path> dirs{work / "det_first", bundle};
  fs::remove_all(dirs[0]);
  for (int run = 0; run < 2; ++run) {
    fs::remove_all(bundle);
    const std::string cmd = "\"" + fbslab + "\" run \"" + config + "\" output=\"" + bundle.string() + "\" > /dev/null";
    const int rc = std::system(cmd.c_str());
    o.require(rc == 0, "run " + std::to_string(run + 1) + " exit status " + std::to_string(rc));
    if (run == 0) fs::rename(bundle, dirs[0]);
  }
  std::size_t files = 0, same = 0;
  for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
    if (!e.is_regular_file() || e.path().filename() == "metadata.json") continue;
    const fs::path rel = fs::relative(e.path(), dirs[0]);
    ++files;
    same += slurp(e.path()) == slurp(dirs[1] / rel);
  }
  o.require(files > 0 && same == files, std::to_string(same) + "/" + std::to_string(files) + " files identical");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: fbs_acceptance <fbslab> <scratch dir>\n");
    return 2;
  }
  const std::string fbslab = argv[1];
  const fs::path work = argv[2];
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exact-profile reproduction", profile_reproduction},
      {"growth exponent", growth_exponent},
      {"dyadic constant", dyadic_constant},
      {"Dini sums", dini_sums},
      {"harmonic replacement", harmonic_replacement_checks},
      {"deficit linearity", deficit_linearity},
      {"truncation and minimality", truncation_minimality},
      {"subharmonicity", subharmonicity},
      {"Hoelder fit", holder_fit},
      {"repelling", repelling},
      {"scaling identities", scaling_identities},
      {"determinism", [&] { return determinism(fbslab, work); }},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2zu %-27s %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !out.pass;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
