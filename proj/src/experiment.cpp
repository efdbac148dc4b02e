#include "fbs/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <sstream>

#include "fbs/catalog.hpp"
#include "fbs/elliptic.hpp"
#include "fbs/energy.hpp"
#include "fbs/estimators.hpp"
#include "fbs/field_io.hpp"
#include "fbs/modulus.hpp"

namespace fbs {

namespace fs = std::filesystem;

namespace {

const char* const kKinds[] = {"solve", "replace", "growth", "repel", "flatness", "holder", "sweep"};

bool known_kind(const std::string& k) {
  return std::find(std::begin(kKinds), std::end(kKinds), k) != std::end(kKinds);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(join(path, it.key()), "unknown key");
  }
}

template <class T>
T take(const json& obj, const char* key, const std::string& path, T def) {
  if (!obj.contains(key)) return def;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(join(path, key), "has the wrong type");
  }
}

double take_number(const json& obj, const char* key, const std::string& path, double def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(join(path, key), "must be finite");
  return d;
}

Point read_point(const json& j, int dim, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ConfigError(path, "expected an array of " + std::to_string(dim) + " numbers");
  Point p{0, 0, 0};
  for (int d = 0; d < dim; ++d) {
    if (!j[d].is_number()) throw ConfigError(path + "." + std::to_string(d), "expected a number");
    p[d] = j[d].get<double>();
  }
  return p;
}

json point_json(const Point& p, int dim) {
  json j = json::array();
  for (int d = 0; d < dim; ++d) j.push_back(p[d]);
  return j;
}

json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  os << s;
}

// ---- config sections -------------------------------------------------------

GridConfig parse_grid(const json& j) {
  const std::string path = "grid";
  reject_unknown(j, path, {"dim", "nodes", "lower", "upper"});
  GridConfig g;
  g.dim = take<int>(j, "dim", path, 1);
  if (g.dim < 1 || g.dim > kMaxDim) throw ConfigError("grid.dim", "must be 1, 2 or 3");
  if (!j.contains("nodes")) throw ConfigError("grid.nodes", "is required");
  const json& n = j.at("nodes");
  g.nodes = {1, 1, 1};
  if (n.is_number_integer()) {
    for (int d = 0; d < g.dim; ++d) g.nodes[d] = n.get<int>();
  } else if (n.is_array() && static_cast<int>(n.size()) == g.dim) {
    for (int d = 0; d < g.dim; ++d) {
      if (!n[d].is_number_integer()) throw ConfigError("grid.nodes." + std::to_string(d), "expected an integer");
      g.nodes[d] = n[d].get<int>();
    }
  } else {
    throw ConfigError("grid.nodes", "expected an integer or one integer per axis");
  }
  for (int d = 0; d < g.dim; ++d)
    if (g.nodes[d] < 3) throw ConfigError("grid.nodes", "every axis needs at least 3 nodes");
  g.lower = {-1, -1, -1};
  g.upper = {1, 1, 1};
  if (j.contains("lower")) g.lower = read_point(j.at("lower"), g.dim, "grid.lower");
  if (j.contains("upper")) g.upper = read_point(j.at("upper"), g.dim, "grid.upper");
  for (int d = g.dim; d < kMaxDim; ++d) g.lower[d] = g.upper[d] = 0.0;
  for (int d = 0; d < g.dim; ++d)
    if (!(g.upper[d] > g.lower[d])) throw ConfigError("grid.upper", "must exceed grid.lower on every axis");
  return g;
}

json grid_json(const GridConfig& g) {
  json n = json::array();
  for (int d = 0; d < g.dim; ++d) n.push_back(g.nodes[d]);
  return {{"dim", g.dim}, {"nodes", n}, {"lower", point_json(g.lower, g.dim)}, {"upper", point_json(g.upper, g.dim)}};
}

FieldsConfig parse_fields(const json& j, int dim) {
  const std::string path = "fields";
  reject_unknown(j, path, {"A", "mu", "lambda", "lambda_cap", "gamma", "gamma_star", "phi"});
  FieldsConfig f;
  if (j.contains("A")) f.A = j.at("A");
  if (j.contains("lambda")) f.lambda = j.at("lambda");
  if (j.contains("gamma")) f.gamma = j.at("gamma");
  if (j.contains("phi")) f.phi = j.at("phi");
  f.mu = take_number(j, "mu", path, f.mu);
  f.lambda_cap = take_number(j, "lambda_cap", path, f.lambda_cap);
  f.gamma_star = take_number(j, "gamma_star", path, f.gamma_star);
  if (!(f.mu > 0.0 && f.mu <= 1.0)) throw ConfigError("fields.mu", "must lie in (0, 1]");
  if (!(f.lambda_cap >= 0.0)) throw ConfigError("fields.lambda_cap", "must be non-negative");
  if (!(f.gamma_star >= 0.0)) throw ConfigError("fields.gamma_star", "must be non-negative");
  if (!(f.gamma_star < sobolev_cap(dim)))
    throw ConfigError("fields.gamma_star", "must stay below the critical Sobolev exponent 2n/(n-2)");
  check_coefficient_spec(f.A, dim, "fields.A");
  check_scalar_spec(f.lambda, dim, "fields.lambda");
  check_scalar_spec(f.gamma, dim, "fields.gamma");
  check_scalar_spec(f.phi, dim, "fields.phi");
  return f;
}

json fields_json(const FieldsConfig& f) {
  return {{"A", f.A},         {"mu", f.mu},         {"lambda", f.lambda}, {"lambda_cap", f.lambda_cap},
          {"gamma", f.gamma}, {"gamma_star", f.gamma_star}, {"phi", f.phi}};
}

EstimatorConfig parse_estimators(const json& j, int dim) {
  const std::string path = "estimators";
  reject_unknown(j, path,
                 {"x0", "center", "k_max", "k_min", "min_radius_cells", "floor", "threshold", "growth_tolerance",
                  "radii", "source", "rho_target", "nu0", "omega", "ball_center", "ball_radius", "inner_radius",
                  "tol_lin", "dini_k_max", "competitors", "points"});
  EstimatorConfig e;
  if (j.contains("x0")) e.x0 = read_point(j.at("x0"), dim, "estimators.x0");
  e.center = take<std::string>(j, "center", path, e.center);
  if (e.center != "free_boundary" && e.center != "given")
    throw ConfigError("estimators.center", "must be \"free_boundary\" or \"given\"");
  e.k_max = take<int>(j, "k_max", path, e.k_max);
  e.k_min = take<int>(j, "k_min", path, e.k_min);
  if (e.k_max < 0) throw ConfigError("estimators.k_max", "must be non-negative");
  if (e.k_min < 1) throw ConfigError("estimators.k_min", "must be at least 1");
  e.min_radius_cells = take_number(j, "min_radius_cells", path, e.min_radius_cells);
  e.floor = take_number(j, "floor", path, e.floor);
  e.threshold = take_number(j, "threshold", path, e.threshold);
  e.growth_tolerance = take_number(j, "growth_tolerance", path, e.growth_tolerance);
  if (e.min_radius_cells < 0.0 || e.floor < 0.0 || e.threshold < 0.0 || !(e.growth_tolerance > 0.0))
    throw ConfigError(path, "min_radius_cells, floor and threshold must be >= 0 and growth_tolerance > 0");
  e.radii = take<std::vector<double>>(j, "radii", path, e.radii);
  for (double r : e.radii)
    if (!(r > 0.0)) throw ConfigError("estimators.radii", "radii must be positive");
  e.source = take<std::string>(j, "source", path, e.source);
  if (e.source != "minimizer" && e.source != "phi")
    throw ConfigError("estimators.source", "must be \"minimizer\" or \"phi\"");
  e.rho_target = take_number(j, "rho_target", path, e.rho_target);
  if (!(e.rho_target > 0.0 && e.rho_target <= 1.0)) throw ConfigError("estimators.rho_target", "must lie in (0, 1]");
  e.nu0 = take_number(j, "nu0", path, e.nu0);
  if (!(e.nu0 >= 0.0)) throw ConfigError("estimators.nu0", "must be non-negative");
  if (j.contains("omega")) e.omega = j.at("omega");
  ModulusOfContinuity::from_json(e.omega, "estimators.omega");
  if (j.contains("ball_center")) e.ball_center = read_point(j.at("ball_center"), dim, "estimators.ball_center");
  e.ball_radius = take_number(j, "ball_radius", path, e.ball_radius);
  e.inner_radius = take_number(j, "inner_radius", path, e.inner_radius);
  if (!(e.ball_radius > 0.0)) throw ConfigError("estimators.ball_radius", "must be positive");
  if (!(e.inner_radius > 0.0 && e.inner_radius <= e.ball_radius))
    throw ConfigError("estimators.inner_radius", "must lie in (0, ball_radius]");
  e.tol_lin = take_number(j, "tol_lin", path, e.tol_lin);
  if (!(e.tol_lin > 0.0)) throw ConfigError("estimators.tol_lin", "must be positive");
  e.dini_k_max = take<int>(j, "dini_k_max", path, e.dini_k_max);
  if (e.dini_k_max < 16) throw ConfigError("estimators.dini_k_max", "must be at least 16");
  e.competitors = take<int>(j, "competitors", path, e.competitors);
  if (e.competitors < 0) throw ConfigError("estimators.competitors", "must be non-negative");
  if (j.contains("points")) {
    const json& p = j.at("points");
    if (!p.is_array()) throw ConfigError("estimators.points", "expected an array of points");
    for (std::size_t i = 0; i < p.size(); ++i)
      e.points.push_back(read_point(p[i], dim, "estimators.points." + std::to_string(i)));
  }
  return e;
}

json estimators_json(const EstimatorConfig& e, int dim) {
  json pts = json::array();
  for (const auto& p : e.points) pts.push_back(point_json(p, dim));
  return {{"x0", point_json(e.x0, dim)},
          {"center", e.center},
          {"k_max", e.k_max},
          {"k_min", e.k_min},
          {"min_radius_cells", e.min_radius_cells},
          {"floor", e.floor},
          {"threshold", e.threshold},
          {"growth_tolerance", e.growth_tolerance},
          {"radii", e.radii},
          {"source", e.source},
          {"rho_target", e.rho_target},
          {"nu0", e.nu0},
          {"omega", e.omega},
          {"ball_center", point_json(e.ball_center, dim)},
          {"ball_radius", e.ball_radius},
          {"inner_radius", e.inner_radius},
          {"tol_lin", e.tol_lin},
          {"dini_k_max", e.dini_k_max},
          {"competitors", e.competitors},
          {"points", pts}};
}

FlatnessConfig parse_flatness(const json& j, int dim) {
  const std::string path = "flatness";
  reject_unknown(j, path, {"family", "s0", "max_doublings", "bisection_steps"});
  FlatnessConfig f;
  f.s0 = take_number(j, "s0", path, f.s0);
  f.max_doublings = take<int>(j, "max_doublings", path, f.max_doublings);
  f.bisection_steps = take<int>(j, "bisection_steps", path, f.bisection_steps);
  if (!(f.s0 > 0.0)) throw ConfigError("flatness.s0", "must be positive");
  if (f.max_doublings < 0 || f.bisection_steps < 0)
    throw ConfigError(path, "max_doublings and bisection_steps must be non-negative");
  if (j.contains("family")) {
    const json& fam = j.at("family");
    if (!fam.is_array()) throw ConfigError("flatness.family", "expected an array");
    for (std::size_t i = 0; i < fam.size(); ++i) {
      const std::string p = "flatness.family." + std::to_string(i);
      reject_unknown(fam[i], p, {"label", "phi", "A"});
      FlatnessMember m;
      m.label = take<std::string>(fam[i], "label", p, "member" + std::to_string(i));
      if (!fam[i].contains("phi")) throw ConfigError(p + ".phi", "is required");
      m.phi = fam[i].at("phi");
      check_scalar_spec(m.phi, dim, p + ".phi");
      if (fam[i].contains("A") && !fam[i].at("A").is_null()) {
        m.A = fam[i].at("A");
        check_coefficient_spec(m.A, dim, p + ".A");
      }
      f.family.push_back(std::move(m));
    }
  }
  return f;
}

json flatness_json(const FlatnessConfig& f) {
  json fam = json::array();
  for (const auto& m : f.family) fam.push_back({{"label", m.label}, {"phi", m.phi}, {"A", m.A}});
  return {{"family", fam}, {"s0", f.s0}, {"max_doublings", f.max_doublings}, {"bisection_steps", f.bisection_steps}};
}

SweepConfig parse_sweep(const json& j) {
  const std::string path = "sweep";
  reject_unknown(j, path, {"kind", "key", "values"});
  SweepConfig s;
  s.kind = take<std::string>(j, "kind", path, s.kind);
  if (!known_kind(s.kind) || s.kind == "sweep") throw ConfigError("sweep.kind", "must name a non-sweep experiment kind");
  s.key = take<std::string>(j, "key", path, s.key);
  if (j.contains("values")) {
    if (!j.at("values").is_array()) throw ConfigError("sweep.values", "expected an array");
    for (const auto& v : j.at("values")) s.values.push_back(v);
  }
  return s;
}

// ---- problem setup ---------------------------------------------------------

struct Problem {
  Grid grid;
  ScalarField phi;
  CoefficientField a;
  ForcingField lam;
  ExponentField gam;
};

Problem build_problem(const ExperimentConfig& c) {
  const Grid g = c.grid.build();
  const FieldsConfig& f = c.fields;
  CoefficientField a = sample_coefficient(f.A, g, f.mu, "fields.A");
  const CoefficientDiagnostics diag = validate_coefficient(a);
  if (!diag.passed) throw ConfigError("fields.A", diag.message);
  try {
    return Problem{g, sample_scalar(f.phi, g, "fields.phi"), std::move(a), sample_forcing(f.lambda, g, f.lambda_cap, "fields.lambda"),
                   sample_exponent(f.gamma, g, f.gamma_star, "fields.gamma")};
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("fields", e.what());
  }
}

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    std::string what = e.what();
    const std::string prefix = std::string(name) + ": ";
    if (what.starts_with(prefix)) what.erase(0, prefix.size());
    throw PipelineError(name, what);
  }
}

double tol_node_floor(const ExperimentConfig& c, double configured) {
  return configured > 0.0 ? configured : 10.0 * c.solver.tol_node;
}

class Bundle {
 public:
  explicit Bundle(const ExperimentConfig& c) : cfg_(c), dir_(c.output) {
    fs::create_directories(dir_);
    write_text(dir_ / "config.json", c.to_json().dump(2) + "\n");
  }

  void check(const std::string& name, bool passed, const std::string& detail) {
    invariants_.push_back({name, passed, detail});
  }
  json& results() { return results_; }
  void text(const std::string& file, const std::string& s) { write_text(dir_ / file, s); }
  void field(const std::string& file, const ScalarField& f) { write_field((dir_ / file).string(), f); }
  const fs::path& dir() const { return dir_; }

  RunSummary finish(bool complete, const std::string& error_stage = {}, const std::string& error = {}) {
    RunSummary s;
    s.kind = cfg_.kind;
    s.output = dir_.string();
    s.complete = complete;
    s.invariants = invariants_;
    json inv = json::array();
    for (const auto& i : invariants_) inv.push_back({{"name", i.name}, {"passed", i.passed}, {"detail", i.detail}});
    json report = {{"schema", kSchema}, {"kind", cfg_.kind}, {"seed", cfg_.seed}, {"complete", complete},
                   {"all_passed", complete && s.all_passed()}, {"invariants", inv}, {"results", results_}};
    if (!complete) report["error"] = {{"stage", error_stage}, {"message", error}};
    s.report = report;
    write_text(dir_ / "report.json", report.dump(2) + "\n");
    return s;
  }

 private:
  const ExperimentConfig& cfg_;
  fs::path dir_;
  std::vector<Invariant> invariants_;
  json results_ = json::object();
};

// ---- pipelines -------------------------------------------------------------

MinimizeResult solve_and_check(const ExperimentConfig& c, const Problem& p, Bundle& b) {
  MinimizeResult res = stage("minimize", [&] { return minimize(p.phi, p.a, p.lam, p.gam, c.solver); });
  const Grid& g = p.grid;
  const ScalarField& u = res.u;
  const MinimizeReport& rep = res.report;
  b.results()["minimize"] = rep.to_json();
  b.field("u.field", u);

  std::string trace = "sweep,energy\n";
  for (std::size_t i = 0; i < rep.energy_trace.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, rep.energy_trace[i]);
    trace += buf;
  }
  b.text("trace.csv", trace);
  b.text("minimize.csv", MinimizeReport::csv_header() + "\n" + rep.csv_row() + "\n");
  b.text("energy.csv", energy_csv_header() + "\n" + energy_csv_row(rep.final_energy, g.dim()) + "\n");

  const double tol = 1e-10;
  const double bsup = p.phi.boundary_sup();
  b.check("minimize.nonnegative", u.min() >= -tol, "min u = " + fmt(u.min()));
  b.check("minimize.sup_bound", u.max() <= bsup + tol, "max u = " + fmt(u.max()) + ", sup|phi| = " + fmt(bsup));
  bool fidelity = true;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.on_boundary(i) && u[i] != p.phi[i]) fidelity = false;
  b.check("minimize.boundary_fidelity", fidelity, "u equals phi on boundary nodes");
  bool monotone = true;
  double prev = rep.initial_energy;
  for (double e : rep.energy_trace) {
    if (e > prev) monotone = false;
    prev = e;
  }
  b.check("minimize.energy_trace_monotone", monotone, std::to_string(rep.energy_trace.size()) + " sweeps");
  b.check("minimize.converged", rep.converged, "final relative decrease " + fmt(rep.final_delta));
  const EnergyBreakdown& e = rep.final_energy;
  b.check("energy.parts_nonnegative", e.dirichlet >= 0.0 && e.singular >= 0.0,
          "dirichlet " + fmt(e.dirichlet) + ", singular " + fmt(e.singular));

  if (c.estimators.competitors > 0) {
    const CompetitorReport cr = sample_competitors(u, p.a, p.lam, p.gam, c.estimators.competitors, c.seed);
    b.results()["competitors"] = {{"count", cr.count}, {"worst_margin", cr.worst_margin}, {"violations", cr.violations}};
    b.check("minimize.competitor_minimality", cr.violations == 0,
            std::to_string(cr.count) + " competitors, worst margin " + fmt(cr.worst_margin));
  }

  const SubharmonicResidual sr = subharmonic_residual(u, p.a);
  const double h = g.mesh_size();
  b.results()["subharmonic"] = {{"min_value", sr.min_value},
                                {"witness", point_json(sr.witness_point, g.dim())},
                                {"C", std::max(0.0, -sr.min_value) / h},
                                {"h", h}};
  return res;
}

Point growth_center(const ExperimentConfig& c, const FreeBoundary& fb, const Grid& g) {
  if (c.estimators.center == "given") return c.estimators.x0;
  return g.coord(nearest_zero_side_node(fb, g, c.estimators.x0));
}

void run_solve(const ExperimentConfig& c, const Problem& p, Bundle& b) { solve_and_check(c, p, b); }

void run_replace(const ExperimentConfig& c, const Problem& p, Bundle& b) {
  const MinimizeResult res = solve_and_check(c, p, b);
  const EstimatorConfig& e = c.estimators;
  const Ball ball{e.ball_center, e.ball_radius};
  ReplacementOptions ro;
  ro.tol = e.tol_lin;
  const ReplacementResult rr = stage("harmonic_replacement", [&] { return harmonic_replacement(res.u, p.a, ball, ro); });
  b.field("h.field", rr.h);
  json out = rr.metadata();
  const double deficit = replacement_deficit(res.u, rr.h, ball);
  out["deficit"] = deficit;
  b.check("replace.residual", rr.residual <= e.tol_lin, "residual " + fmt(rr.residual));
  b.check("replace.max_principle", rr.max_principle_violation <= 1e-12,
          "violation " + fmt(rr.max_principle_violation));

  const ReplacementResult again = stage("harmonic_replacement", [&] { return harmonic_replacement(rr.h, p.a, ball, ro); });
  double proj = 0.0;
  for (std::size_t i = 0; i < p.grid.size(); ++i) proj = std::max(proj, std::abs(again.h[i] - rr.h[i]));
  out["projection_defect"] = proj;
  b.check("replace.projection", proj <= 1e-8, "max |R(h) - h| = " + fmt(proj));

  const double h = p.grid.mesh_size();
  double excess = 0.0, scale = 0.0;
  for (std::size_t i : ball_nodes(p.grid, ball)) {
    excess = std::max(excess, res.u[i] - rr.h[i]);
    scale = std::max(scale, std::abs(res.u[i]));
  }
  out["comparison_excess"] = excess;
  b.check("replace.comparison", excess <= h * std::max(scale, 1e-300),
          "max (u - h) = " + fmt(excess) + ", allowance h |u|_inf = " + fmt(h * scale));

  const Ball inner{e.ball_center, e.inner_radius};
  try {
    const HarnackQuotient hq = harnack_quotient(rr.h, inner, e.ball_center);
    out["harnack"] = {{"sup", hq.sup}, {"inf", hq.inf}, {"sup_ratio", hq.sup_ratio}, {"quotient", hq.quotient}};
  } catch (const Error& err) {
    out["harnack"] = {{"not_applicable", err.what()}};
  }
  b.results()["replacement"] = out;
}

void run_growth(const ExperimentConfig& c, const Problem& p, Bundle& b) {
  const MinimizeResult res = solve_and_check(c, p, b);
  const EstimatorConfig& e = c.estimators;
  const Grid& g = p.grid;
  const double threshold = tol_node_floor(c, e.threshold);
  const FreeBoundary fb = stage("extract_free_boundary", [&] { return extract_free_boundary(res.u, threshold); });
  b.results()["free_boundary"] = fb.to_json();
  const Point x0 = stage("locate_center", [&] { return growth_center(c, fb, g); });
  const int k_max = e.k_max > 0 ? e.k_max : max_dyadic_level(g);
  const DyadicTrace tr = stage("dyadic_sup_trace", [&] { return dyadic_sup_trace(res.u, x0, k_max); });
  b.results()["trace"] = tr.to_json(g.dim());
  b.text("trace_dyadic.csv", tr.csv());
  bool mono = true;
  for (std::size_t i = 1; i < tr.entries.size(); ++i) mono = mono && tr.entries[i].sup <= tr.entries[i - 1].sup;
  b.check("growth.trace_monotone", mono, std::to_string(tr.entries.size()) + " dyadic balls");

  const double gamma0 = interpolate(g, p.gam.values(), x0);
  GrowthOptions go;
  go.k_min = e.k_min;
  go.floor = tol_node_floor(c, e.floor);
  go.min_radius_cells = e.min_radius_cells;
  const GrowthFit fit = stage("fit_growth_exponent", [&] { return fit_growth_exponent(tr, gamma0, go, g.mesh_size()); });
  json fj = fit.to_json();
  fj["gamma_at_x0"] = gamma0;
  b.results()["growth_fit"] = fj;
  b.check("growth.exponent", fit.relative_gap <= e.growth_tolerance,
          "beta_hat " + fmt(fit.beta_hat) + " vs " + fmt(fit.target_beta) + " (gap " + fmt(fit.relative_gap) + ")");

  const auto checks = dyadic_ratio_checks(tr, fit.target_beta, g.mesh_size(), go.floor);
  json rc = json::array();
  bool all = true;
  for (const auto& r : checks) {
    rc.push_back({{"k", r.k}, {"ratio", r.ratio}, {"bound", r.bound}, {"tolerance", r.tolerance}, {"holds", r.holds}});
    all = all && r.holds;
  }
  b.results()["ratio_checks"] = rc;
  b.check("growth.dyadic_ratio", all && !checks.empty(), std::to_string(checks.size()) + " consecutive pairs");

  const ModulusOfContinuity omega = ModulusOfContinuity::from_json(e.omega, "estimators.omega");
  const DiniCheck dc = dini_check(omega, e.dini_k_max, 1e6);
  json dj = {{"status", to_string(dc.status)}, {"partial_sum", dc.partial_sum}, {"terms", dc.terms}};
  if (dc.dini) dj["report"] = dini_sum(omega, gamma0, e.dini_k_max).to_json();
  b.results()["dini"] = dj;
}

void run_repel(const ExperimentConfig& c, const Problem& p, Bundle& b) {
  const MinimizeResult res = solve_and_check(c, p, b);
  const EstimatorConfig& e = c.estimators;
  const Grid& g = p.grid;
  const FreeBoundary fb =
      stage("extract_free_boundary", [&] { return extract_free_boundary(res.u, tol_node_floor(c, e.threshold)); });
  b.results()["free_boundary"] = fb.to_json();
  std::vector<double> mask(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) mask[i] = fb.positive[i];
  b.field("positive.field", ScalarField(g, mask));
  if (!fb.boundary_nodes.empty()) b.field("distance.field", ScalarField(g, fb.distance_map));

  const double gmax = max_gamma_on_boundary(fb, p.gam);
  b.results()["max_gamma_on_boundary"] = number_or_string(gmax);
  b.check("repel.separation", !(gmax >= 2.0 + e.nu0),
          "max gamma on the free boundary " + fmt(gmax) + " vs 2 + nu0 = " + fmt(2.0 + e.nu0));

  const ModulusOfContinuity omega = ModulusOfContinuity::from_json(e.omega, "estimators.omega");
  std::vector<Point> pts = e.points;
  if (pts.empty()) pts.push_back(e.x0);
  json reports = json::array();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const RepellingReport r =
        stage("repelling_distance", [&] { return repelling_distance(res.u, p.gam, omega, pts[k], fb); });
    reports.push_back(r.to_json(g.dim()));
    const std::string name = "repel.point_" + std::to_string(k);
    if (!r.applicable) continue;
    b.check(name, r.satisfied, "d = " + fmt(r.distance) + ", bound = " + fmt(r.bound));
    if (omega.kind() != ModulusOfContinuity::Kind::Zero && std::isfinite(r.bound) && r.bound > 0.0) {
      const double back = omega(r.bound);
      b.check(name + ".inverse", std::abs(back - r.nu) <= 1e-10 * r.nu,
              "omega(omega^-1(nu)) = " + fmt(back) + ", nu = " + fmt(r.nu));
    }
  }
  b.results()["repelling"] = reports;
}

void run_holder(const ExperimentConfig& c, const Problem& p, Bundle& b) {
  const EstimatorConfig& e = c.estimators;
  const Grid& g = p.grid;
  ScalarField u = p.phi;
  if (e.source == "minimizer") u = solve_and_check(c, p, b).u;
  std::vector<double> radii = e.radii;
  if (radii.empty())
    for (double r = 0.25; r >= 4.0 * g.mesh_size() && radii.size() < 6; r /= 2.0) radii.push_back(r);
  const HolderFit hf = stage("campanato_fit", [&] { return campanato_fit(u, e.x0, radii); });
  b.results()["holder_fit"] = hf.to_json();
  b.text("holder.csv", hf.csv());
  b.check("holder.exponent_range", hf.epsilon_hat > 0.0 && hf.epsilon_hat <= 1.0,
          "epsilon_hat " + fmt(hf.epsilon_hat) + (hf.smooth ? " (smooth)" : ""));
}

void run_flatness(const ExperimentConfig& c, const Problem& p, Bundle& b) {
  std::vector<FlatnessInstance> family;
  for (const auto& m : c.flatness.family) {
    const json& aspec = m.A.is_null() ? c.fields.A : m.A;
    family.push_back(stage("flatness_family", [&] {
      return FlatnessInstance{m.label, sample_scalar(m.phi, p.grid, "flatness.phi"),
                              sample_coefficient(aspec, p.grid, c.fields.mu, "flatness.A"), p.lam, p.gam};
    }));
  }
  FlatnessOptions fo;
  fo.s0 = c.flatness.s0;
  fo.max_doublings = c.flatness.max_doublings;
  fo.bisection_steps = c.flatness.bisection_steps;
  fo.zero_threshold = tol_node_floor(c, c.estimators.threshold);
  fo.solver = c.solver;
  const FlatnessResult r =
      stage("flatness_experiment", [&] { return flatness_experiment(family, c.estimators.rho_target, fo); });
  b.results()["flatness"] = r.to_json();
  b.text("flatness.csv", r.csv());
  b.check("flatness.holds_at_zero", !r.probes.empty() && r.probes.front().holds, "lambda = 0 probe");
  b.check("flatness.threshold_positive", r.infinite || r.threshold > 0.0,
          r.infinite      ? std::string("threshold = inf")
          : r.unbracketed ? "threshold >= " + fmt(r.threshold) + ", no failure found"
                          : "threshold " + fmt(r.threshold) + ", fails at " + fmt(r.failing_s));
}

}  // namespace

// ---- public API --------------------------------------------------------------

Grid GridConfig::build() const { return Grid(dim, nodes, lower, upper); }

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("", "the config must be a JSON object");
  reject_unknown(j, "", {"schema", "kind", "seed", "output", "grid", "fields", "solver", "estimators", "flatness", "sweep"});
  ExperimentConfig c;
  if (!j.contains("schema")) throw ConfigError("schema", "is required (expected \"" + std::string(kSchema) + "\")");
  c.schema = take<std::string>(j, "schema", "", "");
  if (c.schema != kSchema) throw ConfigError("schema", "unsupported schema \"" + c.schema + "\"");
  c.kind = take<std::string>(j, "kind", "", c.kind);
  if (!known_kind(c.kind)) throw ConfigError("kind", "unknown experiment kind \"" + c.kind + "\"");
  c.seed = take<std::uint64_t>(j, "seed", "", c.seed);
  c.output = take<std::string>(j, "output", "", c.output);
  if (c.output.empty()) throw ConfigError("output", "must not be empty");
  if (!j.contains("grid")) throw ConfigError("grid", "is required");
  c.grid = parse_grid(j.at("grid"));
  c.fields = parse_fields(j.value("fields", json::object()), c.grid.dim);
  c.solver = MinimizeOptions::from_json(j.value("solver", json()), "solver");
  c.solver.seed = c.seed;
  c.estimators = parse_estimators(j.value("estimators", json::object()), c.grid.dim);
  c.flatness = parse_flatness(j.value("flatness", json::object()), c.grid.dim);
  c.sweep = parse_sweep(j.value("sweep", json::object()));

  try {
    c.grid.build();
  } catch (const Error& e) {
    throw ConfigError("grid", e.what());
  }
  build_problem(c);
  if (c.kind == "flatness" && c.flatness.family.empty()) throw ConfigError("flatness.family", "must not be empty");
  if (c.kind == "sweep") {
    if (c.sweep.key.empty()) throw ConfigError("sweep.key", "is required");
    if (c.sweep.values.empty()) throw ConfigError("sweep.values", "must not be empty");
    for (std::size_t i = 0; i < c.sweep.values.size(); ++i) {
      json sub = c.to_json();
      sub["kind"] = c.sweep.kind;
      try {
        apply_override(sub, c.sweep.key + "=" + c.sweep.values[i].dump());
        from_json(sub);
      } catch (const ConfigError& e) {
        throw ConfigError("sweep.values." + std::to_string(i), e.what());
      }
    }
  }
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"schema", schema},
          {"kind", kind},
          {"seed", seed},
          {"output", output},
          {"grid", grid_json(grid)},
          {"fields", fields_json(fields)},
          {"solver", solver.to_json()},
          {"estimators", estimators_json(estimators, grid.dim)},
          {"flatness", flatness_json(flatness)},
          {"sweep", {{"kind", sweep.kind}, {"key", sweep.key}, {"values", sweep.values}}}};
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must have the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& k = parts[i];
    if (k.empty()) throw ConfigError(key, "empty path component");
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(k);
      } catch (const std::exception&) {
        throw ConfigError(key, "array index expected at \"" + k + "\"");
      }
      if (idx >= node->size()) throw ConfigError(key, "array index out of range");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError(key, "cannot descend into a scalar at \"" + k + "\"");
      node = &(*node)[k];
    }
    if (last) *node = value;
  }
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream is(path);
  if (!is) throw ConfigError("", "cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return ExperimentConfig::from_json(doc);
}

bool RunSummary::all_passed() const {
  return complete && std::all_of(invariants.begin(), invariants.end(), [](const Invariant& i) { return i.passed; });
}

RunSummary run_experiment(const ExperimentConfig& config) {
  const std::string started = iso_now();
  const auto t0 = std::chrono::steady_clock::now();
  Bundle b(config);
  auto write_metadata = [&] {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(b.dir() / "metadata.json",
               json({{"started", started}, {"finished", iso_now()}, {"wall_seconds", secs}}).dump(2) + "\n");
  };

  try {
    if (config.kind == "sweep") {
      const std::size_t n = config.sweep.values.size();
      std::vector<RunSummary> subs(n);
      std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic, 1)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
          json doc = config.to_json();
          doc["kind"] = config.sweep.kind;
          apply_override(doc, config.sweep.key + "=" + config.sweep.values[i].dump());
          char name[32];
          std::snprintf(name, sizeof name, "run_%03td", i);
          doc["output"] = (fs::path(config.output) / name).string();
          subs[i] = run_experiment(ExperimentConfig::from_json(doc));
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
      json runs = json::array();
      bool complete = true;
      for (std::size_t i = 0; i < n; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%03zu", i);
        const bool ok = errors[i].empty() && subs[i].all_passed();
        runs.push_back({{"run", name},
                        {"value", config.sweep.values[i]},
                        {"complete", errors[i].empty()},
                        {"all_passed", ok}});
        if (!errors[i].empty()) complete = false;
        b.check(std::string("sweep.") + name, ok, errors[i].empty() ? "see " + std::string(name) : errors[i]);
      }
      b.results()["runs"] = runs;
      b.results()["key"] = config.sweep.key;
      if (!complete) {
        b.finish(false, "sweep", "one or more runs failed");
        write_metadata();
        throw PipelineError("sweep", "one or more runs failed");
      }
      RunSummary s = b.finish(true);
      write_metadata();
      return s;
    }

    const Problem p = stage("fields", [&] { return build_problem(config); });
    if (config.kind == "solve")
      run_solve(config, p, b);
    else if (config.kind == "replace")
      run_replace(config, p, b);
    else if (config.kind == "growth")
      run_growth(config, p, b);
    else if (config.kind == "repel")
      run_repel(config, p, b);
    else if (config.kind == "holder")
      run_holder(config, p, b);
    else if (config.kind == "flatness")
      run_flatness(config, p, b);
  } catch (const PipelineError& e) {
    if (config.kind != "sweep") {
      b.finish(false, e.stage(), e.what());
      write_metadata();
    }
    throw;
  }
  RunSummary s = b.finish(true);
  write_metadata();
  return s;
}

RunSummary read_bundle(const std::string& dir) {
  const fs::path p = fs::path(dir) / "report.json";
  std::ifstream is(p);
  if (!is) throw Error("no report.json in " + dir);
  json r;
  try {
    r = json::parse(is);
  } catch (const json::exception& e) {
    throw Error("malformed report.json: " + std::string(e.what()));
  }
  RunSummary s;
  s.output = dir;
  s.kind = r.value("kind", "");
  s.complete = r.value("complete", false);
  for (const auto& i : r.value("invariants", json::array()))
    s.invariants.push_back({i.value("name", ""), i.value("passed", false), i.value("detail", "")});
  s.report = r;
  return s;
}

std::string format_summary(const RunSummary& s) {
  std::size_t passed = 0;
  for (const auto& i : s.invariants) passed += i.passed ? 1 : 0;
  std::string out = s.kind + " @ " + s.output + ": " + (s.complete ? "complete" : "INCOMPLETE") + ", " +
                    std::to_string(passed) + "/" + std::to_string(s.invariants.size()) + " invariants passed\n";
  if (!s.complete && s.report.contains("error"))
    out += "  error in stage " + s.report["error"].value("stage", "?") + ": " + s.report["error"].value("message", "") + "\n";
  for (const auto& i : s.invariants) out += std::string(i.passed ? "  PASS  " : "  FAIL  ") + i.name + "  " + i.detail + "\n";
  return out;
}

}  // namespace fbs
