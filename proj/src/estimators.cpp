#include "fbs/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fbs/error.hpp"
#include "fbs/kernels.hpp"

namespace fbs {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json point_json(const Point& p, int dim) {
  nlohmann::json j = nlohmann::json::array();
  for (int d = 0; d < dim; ++d) j.push_back(p[d]);
  return j;
}

// Share of the node's dual cell (clipped to the box) that lies in the ball.
// Exact in 1D; straddling cells in 2D/3D are sub-sampled on 8 midpoints per axis.
double dual_cell_share(const Grid& g, std::size_t i, const Ball& ball) {
  const Point x = g.coord(i);
  const int n = g.dim();
  Point lo{0, 0, 0}, hi{0, 0, 0};
  double near = 0.0, far = 0.0, full = 1.0, clipped = 1.0;
  for (int d = 0; d < n; ++d) {
    const double s = g.spacing(d);
    lo[d] = std::max(x[d] - 0.5 * s, g.lower(d));
    hi[d] = std::min(x[d] + 0.5 * s, g.upper(d));
    full *= s;
    clipped *= hi[d] - lo[d];
    const double c = ball.center[d];
    const double gap = std::max({lo[d] - c, c - hi[d], 0.0});
    const double reach = std::max(std::abs(lo[d] - c), std::abs(hi[d] - c));
    near += gap * gap;
    far += reach * reach;
  }
  const double r2 = ball.radius * ball.radius;
  if (near > r2) return 0.0;
  if (far <= r2) return clipped / full;
  if (n == 1) {
    const double a = std::max(lo[0], ball.center[0] - ball.radius);
    const double b = std::min(hi[0], ball.center[0] + ball.radius);
    return std::max(b - a, 0.0) / full;
  }
  constexpr int kSub = 8;
  int inside = 0, total = 0;
  Index k{0, 0, 0};
  for (k[0] = 0; k[0] < kSub; ++k[0])
    for (k[1] = 0; k[1] < kSub; ++k[1])
      for (k[2] = 0; k[2] < (n == 3 ? kSub : 1); ++k[2]) {
        Point p{0, 0, 0};
        for (int d = 0; d < n; ++d) p[d] = lo[d] + (k[d] + 0.5) * (hi[d] - lo[d]) / kSub;
        inside += ball.contains(p, n);
        ++total;
      }
  return clipped / full * inside / total;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

double ball_max(const ScalarField& u, const Ball& b) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i : ball_nodes(u.grid(), b)) m = std::max(m, u[i]);
  return m;
}

}  // namespace

// ---- dyadic growth -------------------------------------------------------

int max_dyadic_level(const Grid& grid) {
  const double h = grid.mesh_size();
  int k = 0;
  while (std::ldexp(1.0, -(k + 1)) >= h * (1.0 - 1e-12)) ++k;
  return k;
}

DyadicTrace dyadic_sup_trace(const ScalarField& u, const Point& x0, int k_max) {
  const Grid& g = u.grid();
  if (!g.contains(x0)) throw Error("dyadic_sup_trace: x0 lies outside the grid");
  if (k_max < 1) throw Error("dyadic_sup_trace: k_max must be at least 1");
  if (k_max > max_dyadic_level(g))
    throw Error("dyadic_sup_trace: k_max = " + std::to_string(k_max) + " exceeds the resolvable level " +
                std::to_string(max_dyadic_level(g)));
  DyadicTrace t;
  t.center = x0;
  t.k_max = k_max;
  t.all_zero = true;
  for (int k = 1; k <= k_max; ++k) {
    const double r = std::ldexp(1.0, -k);
    const double s = ball_max(u, Ball{x0, r});
    if (!std::isfinite(s)) throw Error("dyadic_sup_trace: B_{2^-" + std::to_string(k) + "}(x0) contains no node");
    t.entries.push_back({k, r, s});
    if (s > 0.0) t.all_zero = false;
  }
  return t;
}

nlohmann::json DyadicTrace::to_json(int dim) const {
  nlohmann::json e = nlohmann::json::array();
  for (const auto& x : entries) e.push_back({{"k", x.k}, {"r", x.r}, {"S_r", x.sup}});
  return {{"center", point_json(center, dim)}, {"k_max", k_max}, {"all_zero", all_zero}, {"entries", e}};
}

std::string DyadicTrace::csv_header() { return "k,r,S_r"; }

std::string DyadicTrace::csv() const {
  std::string s = csv_header() + "\n";
  for (const auto& x : entries) s += std::to_string(x.k) + "," + fmt(x.r) + "," + fmt(x.sup) + "\n";
  return s;
}

GrowthFit fit_growth_exponent(const DyadicTrace& trace, double gamma_at_x0, const GrowthOptions& opts, double h) {
  if (!(gamma_at_x0 < 2.0))
    throw Error("fit_growth_exponent: gamma(x0) >= 2 has no growth exponent; use repelling_distance in that regime");
  if (gamma_at_x0 < 0.0) throw Error("fit_growth_exponent: gamma(x0) must be non-negative");
  if (trace.all_zero) throw Error("fit_growth_exponent: the trace is identically zero");
  GrowthFit f;
  f.target_beta = 2.0 / (2.0 - gamma_at_x0);
  std::vector<double> x, y;
  f.window_k_min = f.window_k_max = 0;
  for (const auto& e : trace.entries) {
    if (e.k < opts.k_min || !(e.sup > opts.floor)) continue;
    if (opts.min_radius_cells > 0.0 && e.r < opts.min_radius_cells * h * (1.0 - 1e-12)) continue;
    if (x.empty()) f.window_k_min = e.k;
    f.window_k_max = e.k;
    x.push_back(std::log(e.r));
    y.push_back(std::log(e.sup));
  }
  f.used = static_cast<int>(x.size());
  if (f.used < 4) throw Error("fit_growth_exponent: fewer than 4 usable trace entries");
  const LineFit lf = least_squares(x, y);
  f.beta_hat = lf.slope;
  f.intercept = lf.intercept;
  f.r_squared = lf.r_squared;
  f.relative_gap = std::abs(f.beta_hat - f.target_beta) / f.target_beta;
  return f;
}

nlohmann::json GrowthFit::to_json() const {
  return {{"beta_hat", beta_hat},         {"target_beta", target_beta}, {"relative_gap", relative_gap},
          {"r_squared", r_squared},       {"C0", std::exp(intercept)},  {"window", {window_k_min, window_k_max}},
          {"used_entries", used}};
}

std::vector<RatioCheck> dyadic_ratio_checks(const DyadicTrace& trace, double beta, double h, double floor) {
  std::vector<RatioCheck> out;
  for (std::size_t i = 0; i + 1 < trace.entries.size(); ++i) {
    const auto& a = trace.entries[i];
    const auto& b = trace.entries[i + 1];
    if (b.r < 2.0 * h * (1.0 - 1e-12) || !(a.sup > floor)) continue;
    RatioCheck c;
    c.k = a.k;
    c.ratio = b.sup / a.sup;
    c.tolerance = std::pow(b.r / (b.r - h), beta) - 1.0;
    c.bound = std::pow(2.0, -beta) * (1.0 + c.tolerance);
    c.holds = c.ratio <= c.bound;
    out.push_back(c);
  }
  return out;
}

// ---- Dini sums -----------------------------------------------------------

DiniReport dini_sum(const ModulusOfContinuity& omega, double gamma0, int k_max, double cap) {
  if (!(gamma0 < 2.0)) throw Error("dini_sum: gamma0 must be below 2");
  const DiniCheck c = dini_check(omega, k_max, cap);
  if (!c.dini) throw Error(std::string("dini_sum: the modulus is not Dini (") + to_string(c.status) + ")");
  DiniReport r;
  r.gamma0 = gamma0;
  r.sum = c.partial_sum;
  r.terms = c.terms;
  r.log2M = 2.0 / (2.0 - gamma0) * r.sum;
  r.M = std::exp2(r.log2M);
  return r;
}

nlohmann::json DiniReport::to_json() const {
  return {{"gamma0", gamma0}, {"sum", sum}, {"log2M", log2M}, {"M", M}, {"terms", terms}};
}

// ---- Hoelder / Campanato -------------------------------------------------

HolderFit campanato_fit(const ScalarField& u, const Point& x0, const std::vector<double>& radii) {
  const Grid& g = u.grid();
  if (radii.size() < 4) throw Error("campanato_fit: at least 4 radii are needed");
  const double h = g.mesh_size();
  HolderFit f;
  f.center = x0;
  f.radii = radii;
  double scale = 0.0;
  for (double v : u.values()) scale = std::max(scale, std::abs(v));
  for (double tau : radii) {
    if (!(tau >= 1.5 * h)) throw Error("campanato_fit: radius " + fmt(tau) + " is below mesh resolution");
    const Ball ball{x0, tau};
    std::vector<std::pair<std::size_t, double>> nodes;
    double mass = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double w = dual_cell_share(g, i, ball);
      if (w == 0.0) continue;
      nodes.emplace_back(i, w);
      mass += w;
      mean += w * u[i];
    }
    mean /= mass;
    double osc = 0.0;
    for (const auto& [i, w] : nodes) osc += w * (u[i] - mean) * (u[i] - mean);
    f.oscillations.push_back(osc / mass);
  }
  const double noise = (1e-14 * scale) * (1e-14 * scale);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (f.oscillations[i] > noise) {
      x.push_back(std::log(radii[i]));
      y.push_back(std::log(f.oscillations[i]));
    }
  if (x.size() < 2) {
    f.smooth = true;
    f.capped = true;
    f.epsilon_hat = 1.0;
    f.constant_hat = 0.0;
    f.r_squared = 1.0;
    return f;
  }
  const LineFit lf = least_squares(x, y);
  f.epsilon_hat = lf.slope / 2.0;
  f.constant_hat = std::exp(lf.intercept / 2.0);
  f.r_squared = lf.r_squared;
  if (f.epsilon_hat > 1.0) {
    f.epsilon_hat = 1.0;
    f.capped = true;
  }
  return f;
}

nlohmann::json HolderFit::to_json() const {
  return {{"epsilon_hat", epsilon_hat}, {"constant_hat", constant_hat}, {"r_squared", r_squared},
          {"smooth", smooth},           {"capped", capped},             {"radii", radii},
          {"oscillations", oscillations}};
}

std::string HolderFit::csv_header() { return "radius,oscillation"; }

std::string HolderFit::csv() const {
  std::string s = csv_header() + "\n";
  for (std::size_t i = 0; i < radii.size(); ++i) s += fmt(radii[i]) + "," + fmt(oscillations[i]) + "\n";
  return s;
}

// ---- free boundary -------------------------------------------------------

FreeBoundary extract_free_boundary(const ScalarField& u, double threshold) {
  if (!(threshold >= 0.0)) throw Error("extract_free_boundary: threshold must be non-negative");
  const Grid& g = u.grid();
  FreeBoundary fb;
  fb.threshold = threshold;
  fb.positive.assign(g.size(), 0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (u[i] > threshold) {
      fb.positive[i] = 1;
      ++count;
    }
  fb.empty_positive = count == 0;
  std::array<std::size_t, 2 * kMaxDim> nb{};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int k = g.axis_neighbors(i, nb);
    bool differs = false;
    for (int j = 0; j < k; ++j) differs = differs || fb.positive[nb[j]] != fb.positive[i];
    if (!differs) continue;
    (fb.positive[i] ? fb.boundary_nodes : fb.zero_side_nodes).push_back(i);
  }
  fb.full_positive = count == g.size();
  fb.distance_map.assign(g.size(), std::numeric_limits<double>::infinity());
  if (!fb.boundary_nodes.empty()) kernels::omp::distance_to_set(g, fb.boundary_nodes, fb.distance_map);
  return fb;
}

nlohmann::json FreeBoundary::to_json() const {
  std::size_t pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), 1));
  return {{"threshold", threshold},
          {"positive_nodes", pos},
          {"boundary_nodes", boundary_nodes.size()},
          {"zero_side_nodes", zero_side_nodes.size()},
          {"empty_positive", empty_positive},
          {"full_positive", full_positive}};
}

std::size_t nearest_zero_side_node(const FreeBoundary& fb, const Grid& grid, const Point& p) {
  if (fb.zero_side_nodes.empty()) throw Error("the field has no free-boundary point");
  std::size_t best = fb.zero_side_nodes.front();
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i : fb.zero_side_nodes) {
    const double d = distance(grid.coord(i), p, grid.dim());
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

double max_gamma_on_boundary(const FreeBoundary& fb, const ExponentField& gamma) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i : fb.boundary_nodes) m = std::max(m, gamma[i]);
  return m;
}

RepellingReport repelling_distance(const ScalarField& u, const ExponentField& gamma, const ModulusOfContinuity& omega,
                                   const Point& x0, const FreeBoundary& fb) {
  const Grid& g = u.grid();
  require_same_grid(g, gamma.grid(), "repelling_distance: u vs gamma");
  if (fb.positive.size() != g.size()) throw Error("repelling_distance: free boundary was extracted on another grid");
  if (!g.contains(x0)) throw Error("repelling_distance: x0 lies outside the grid");
  RepellingReport r;
  r.x0 = x0;
  r.gamma_at_x0 = interpolate(g, gamma.values(), x0);
  r.nu = r.gamma_at_x0 - 2.0;
  r.mesh_tolerance = 2.0 * g.mesh_size();
  for (std::size_t i : fb.boundary_nodes) r.distance = std::min(r.distance, distance(g.coord(i), x0, g.dim()));
  if (!(r.nu > 0.0)) return r;
  r.applicable = true;
  r.bound = omega.inverse(r.nu);
  r.satisfied = r.distance >= r.bound - r.mesh_tolerance;
  return r;
}

nlohmann::json RepellingReport::to_json(int dim) const {
  nlohmann::json j = {{"x0", point_json(x0, dim)}, {"gamma_at_x0", gamma_at_x0}, {"nu", nu}, {"applicable", applicable},
                      {"mesh_tolerance", mesh_tolerance}};
  j["distance"] = std::isfinite(distance) ? nlohmann::json(distance) : nlohmann::json("inf");
  if (applicable) {
    j["bound"] = std::isfinite(bound) ? nlohmann::json(bound) : nlohmann::json("inf");
    j["satisfied"] = satisfied;
  }
  return j;
}

// ---- flatness ------------------------------------------------------------

namespace {

struct MemberOutcome {
  bool zero_at_origin = false;
  double sup_half = 0.0;
};

MemberOutcome run_member(const FlatnessInstance& m, double s, const FlatnessOptions& opts) {
  std::vector<double> lam = m.lambda_base.values();
  for (double& v : lam) v *= s;
  const ForcingField ls(m.phi.grid(), std::move(lam), std::max(s, 1.0) * m.lambda_base.cap());
  const MinimizeResult res = minimize(m.phi, m.a, ls, m.gamma, opts.solver);
  MemberOutcome o;
  o.zero_at_origin = interpolate(res.u.grid(), res.u.values(), Point{0, 0, 0}) <= opts.zero_threshold;
  o.sup_half = ball_max(res.u, Ball{Point{0, 0, 0}, 0.5});
  return o;
}

}  // namespace

FlatnessResult flatness_experiment(const std::vector<FlatnessInstance>& family, double rho_target,
                                   const FlatnessOptions& opts) {
  if (family.empty()) throw Error("flatness_experiment: the instance family is empty");
  if (!(rho_target > 0.0 && rho_target <= 1.0)) throw Error("flatness_experiment: rho_target must lie in (0, 1]");
  if (!(opts.s0 > 0.0)) throw Error("flatness_experiment: s0 must be positive");
  for (const auto& m : family) {
    if (m.phi.min() < 0.0 || m.phi.max() > 1.0) throw Error("flatness_experiment: member " + m.label + " is not normalised to [0, 1]");
  }

  FlatnessResult out;
  out.rho_target = rho_target;
  for (const auto& m : family) out.family.push_back(m.label);

  auto probe = [&](double s) {
    std::vector<MemberOutcome> res(family.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(family.size()); ++i)
      res[i] = run_member(family[i], s, opts);
    FlatnessProbe p;
    p.s = s;
    p.holds = true;
    for (const auto& r : res) {
      if (!r.zero_at_origin) continue;
      ++p.zero_at_origin;
      p.worst_sup = std::max(p.worst_sup, r.sup_half);
      if (r.sup_half > rho_target) p.holds = false;
    }
    out.probes.push_back(p);
    return p.holds;
  };

  if (!probe(0.0))
    throw Error("flatness_experiment: the property fails at lambda = 0; the family is misconfigured");

  bool forcing = false;
  for (const auto& m : family) forcing = forcing || m.lambda_base.sup() > 0.0;
  if (!forcing) {
    out.infinite = true;
    out.threshold = std::numeric_limits<double>::infinity();
    return out;
  }

  double lo = 0.0, hi = opts.s0;
  bool failed = false;
  for (int j = 0; j <= opts.max_doublings; ++j) {
    if (!probe(hi)) {
      failed = true;
      break;
    }
    lo = hi;
    hi *= 2.0;
  }
  if (!failed) {
    out.unbracketed = true;
    out.threshold = lo;
    return out;
  }
  for (int j = 0; j < opts.bisection_steps; ++j) {
    const double mid = 0.5 * (lo + hi);
    (probe(mid) ? lo : hi) = mid;
  }
  out.threshold = lo;
  out.failing_s = hi;
  return out;
}

nlohmann::json FlatnessResult::to_json() const {
  nlohmann::json probes_json = nlohmann::json::array();
  for (const auto& p : probes)
    probes_json.push_back(
        {{"s", p.s}, {"holds", p.holds}, {"zero_at_origin", p.zero_at_origin}, {"worst_sup", p.worst_sup}});
  nlohmann::json j = {{"rho_target", rho_target}, {"infinite", infinite}, {"unbracketed", unbracketed}, {"family", family}, {"probes", probes_json}};
  j["threshold"] = infinite ? nlohmann::json("inf") : nlohmann::json(threshold);
  j["failing_s"] = std::isfinite(failing_s) ? nlohmann::json(failing_s) : nlohmann::json("inf");
  return j;
}

std::string FlatnessResult::csv_header() { return "s,holds,zero_at_origin,worst_sup"; }

std::string FlatnessResult::csv() const {
  std::string s = csv_header() + "\n";
  for (const auto& p : probes)
    s += fmt(p.s) + "," + (p.holds ? "1" : "0") + "," + std::to_string(p.zero_at_origin) + "," + fmt(p.worst_sup) + "\n";
  return s;
}

}  // namespace fbs
