#include "fbs/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "fbs/error.hpp"
#include "fbs/q1.hpp"

namespace fbs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Root of q'(t) = 2 a t - b + c g t^{g-1} in (lo, hi), given q'(lo) < 0 < q'(hi).
/// Newton steps are kept inside the shrinking bracket, bisection otherwise.
double derivative_root(double a, double b, double c, double g, double lo, double hi) {
  auto dq = [&](double t) { return 2.0 * a * t - b + c * g * std::pow(t, g - 1.0); };
  auto d2q = [&](double t) { return 2.0 * a + c * g * (g - 1.0) * std::pow(t, g - 2.0); };
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = dq(t);
    if (f == 0.0) return t;
    if (f < 0.0)
      lo = t;
    else
      hi = t;
    const double s = d2q(t);
    double next = s > 0.0 ? t - f / s : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == t || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return next;
    t = next;
  }
  return t;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t k) { return seed * 0x9E3779B97F4A7C15ULL + k; }

struct SingleRun {
  std::vector<double> u;
  MinimizeReport report;
};

class Sweeper {
 public:
  Sweeper(const ScalarField& phi, const CoefficientField& a, const ForcingField& lam, const ExponentField& gam,
          const MinimizeOptions& opts)
      : phi_(phi), a_(a), lam_(lam), gam_(gam), opts_(opts), grid_(phi.grid()) {
    const int n = grid_.dim();
    stencil_size_ = 1;
    for (int d = 0; d < n; ++d) stencil_size_ *= 3;
    center_ = (stencil_size_ - 1) / 2;
    k_ = assemble_stiffness(a);
    w_ = node_weights(grid_);
    Index base{1, 1, 1};
    for (int d = n; d < kMaxDim; ++d) base[d] = 0;
    const auto origin = static_cast<std::ptrdiff_t>(grid_.id(base));
    delta_.resize(stencil_size_);
    for (int o = 0; o < stencil_size_; ++o) {
      Index ijk = base;
      int rest = o;
      for (int d = 0; d < n; ++d) {
        ijk[d] += rest % 3 - 1;
        rest /= 3;
      }
      delta_[o] = static_cast<std::ptrdiff_t>(grid_.id(ijk)) - origin;
    }
    for (std::size_t i = 0; i < grid_.size(); ++i)
      if (!grid_.on_boundary(i)) interior_.push_back(i);
    upper_ = opts.clamp ? phi.boundary_sup() : kInf;
  }

  double upper() const { return upper_; }

  std::vector<double> initial(int start) const {
    std::vector<double> u = phi_.values();
    const double hi = opts_.clamp ? upper_ : std::max(phi_.boundary_sup(), 0.0);
    std::mt19937_64 rng(mix(opts_.seed, static_cast<std::uint64_t>(start) + 1));
    for (std::size_t i : interior_) {
      if (start == 0)
        u[i] = std::clamp(u[i], 0.0, upper_);
      else
        u[i] = hi * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    }
    return u;
  }

  SingleRun run(std::vector<double> u) const {
    SingleRun out;
    MinimizeReport& rep = out.report;
    double tracked = total_energy(u);
    rep.initial_energy = tracked;
    std::vector<std::size_t> order = interior_;
    int quiet = 0;
    for (int sweep = 1; sweep <= opts_.max_sweeps; ++sweep) {
      if (opts_.shuffle) {
        std::mt19937_64 rng(mix(opts_.seed, 0x5eedULL + static_cast<std::uint64_t>(sweep)));
        for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng() % k]);
      }
      double decrease = 0.0;
      double max_update = 0.0;
      std::size_t clamped = 0;
      for (std::size_t i : order) {
        const double* row = &k_[i * stencil_size_];
        double coupling = 0.0;
        for (int o = 0; o < stencil_size_; ++o)
          if (o != center_) coupling += row[o] * u[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + delta_[o])];
        const double a = row[center_];
        const double b = -2.0 * coupling;
        const double t_old = u[i];
        double t_new = node_solve(a, b, w_[i], lam_[i], gam_[i], upper_);
        if (upper_ < kInf && t_new == upper_ && node_solve(a, b, w_[i], lam_[i], gam_[i]) > upper_) ++clamped;
        double dq = node_objective_change(t_new, t_old, a, b, w_[i], lam_[i], gam_[i]);
        if (opts_.relaxation != 1.0 && t_new > 0.0) {
          const double t_sor = std::min(upper_, t_old + opts_.relaxation * (t_new - t_old));
          if (t_sor > 0.0) {
            const double dq_sor = node_objective_change(t_sor, t_old, a, b, w_[i], lam_[i], gam_[i]);
            if (dq_sor <= 0.0) {
              t_new = t_sor;
              dq = dq_sor;
            }
          }
        }
        if (dq > 0.0) {
          // Only rounding can make the exact minimiser look worse than t_old.
          t_new = t_old;
          dq = 0.0;
        }
        decrease -= dq;
        max_update = std::max(max_update, std::abs(t_new - t_old));
        u[i] = t_new;
      }
      const double before = tracked;
      tracked -= decrease;
      rep.energy_trace.push_back(tracked);
      rep.trace_drift = std::max(rep.trace_drift, std::abs(total_energy(u) - tracked));
      rep.sweeps_used = sweep;
      rep.max_update = max_update;
      rep.clamped_nodes = clamped;
      rep.final_delta = decrease / std::max(std::abs(before), 1e-300);
      if (max_update == 0.0) {
        rep.converged = true;
        break;
      }
      quiet = (rep.final_delta < opts_.tol_energy && max_update <= opts_.tol_node) ? quiet + 1 : 0;
      if (quiet >= opts_.patience) {
        rep.converged = true;
        break;
      }
    }
    out.u = std::move(u);
    return out;
  }

 private:
  double total_energy(const std::vector<double>& u) const {
    return energy(ScalarField(grid_, u), a_, lam_, gam_).total;
  }

  const ScalarField& phi_;
  const CoefficientField& a_;
  const ForcingField& lam_;
  const ExponentField& gam_;
  const MinimizeOptions& opts_;
  const Grid& grid_;
  int stencil_size_ = 1;
  int center_ = 0;
  std::vector<double> k_;
  std::vector<double> w_;
  std::vector<std::ptrdiff_t> delta_;
  std::vector<std::size_t> interior_;
  double upper_ = kInf;
};

}  // namespace

void MinimizeOptions::validate() const {
  if (max_sweeps < 1) throw Error("max_sweeps must be at least 1");
  if (!(tol_energy > 0.0) || !(tol_node > 0.0)) throw Error("solver tolerances must be positive");
  if (patience < 1) throw Error("patience must be at least 1");
  if (starts < 1) throw Error("starts must be at least 1");
  if (!(relaxation >= 1.0 && relaxation < 2.0)) throw Error("relaxation must lie in [1, 2)");
}

nlohmann::json MinimizeOptions::to_json() const {
  return {{"max_sweeps", max_sweeps}, {"tol_energy", tol_energy}, {"tol_node", tol_node},
          {"patience", patience},     {"seed", seed},             {"shuffle", shuffle},
          {"clamp", clamp},           {"starts", starts},         {"relaxation", relaxation}};
}

MinimizeOptions MinimizeOptions::from_json(const nlohmann::json& j, const std::string& path) {
  MinimizeOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw ConfigError(path, "solver options must be an object");
  static const char* known[] = {"max_sweeps", "tol_energy", "tol_node", "patience", "seed",
                                "shuffle",    "clamp",      "starts",   "relaxation"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
        std::end(known))
      throw ConfigError(path + "." + it.key(), "unknown solver option");
  try {
    o.max_sweeps = j.value("max_sweeps", o.max_sweeps);
    o.tol_energy = j.value("tol_energy", o.tol_energy);
    o.tol_node = j.value("tol_node", o.tol_node);
    o.patience = j.value("patience", o.patience);
    o.seed = j.value("seed", o.seed);
    o.shuffle = j.value("shuffle", o.shuffle);
    o.clamp = j.value("clamp", o.clamp);
    o.starts = j.value("starts", o.starts);
    o.relaxation = j.value("relaxation", o.relaxation);
    o.validate();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  return o;
}

nlohmann::json MinimizeReport::to_json() const {
  nlohmann::json starts_json = nlohmann::json::array();
  for (const auto& s : starts)
    starts_json.push_back({{"start", s.start}, {"energy", s.energy}, {"sweeps", s.sweeps}, {"converged", s.converged}});
  return {{"sweeps_used", sweeps_used},
          {"initial_energy", initial_energy},
          {"energy_trace", energy_trace},
          {"trace_drift", trace_drift},
          {"final_delta", final_delta},
          {"max_update", max_update},
          {"clamped_nodes", clamped_nodes},
          {"converged", converged},
          {"energy", {{"dirichlet", final_energy.dirichlet}, {"singular", final_energy.singular}, {"total", final_energy.total}}},
          {"best_start", best_start},
          {"starts", starts_json},
          {"near_equal_distinct", near_equal_distinct}};
}

std::string MinimizeReport::csv_header() {
  return "sweeps_used,converged,initial_energy,final_energy,final_delta,max_update,clamped_nodes,trace_drift";
}

std::string MinimizeReport::csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%zu,%.17g", sweeps_used, converged ? 1 : 0,
                initial_energy, final_energy.total, final_delta, max_update, clamped_nodes, trace_drift);
  return buf;
}

double node_objective(double t, double a, double b, double w, double lam, double gam) {
  double q = a * t * t - b * t;
  if (t > 0.0) q += lam * w * std::pow(t, gam);
  return q;
}

double node_objective_change(double t1, double t0, double a, double b, double w, double lam, double gam) {
  const double c = lam * w;
  auto s = [gam](double t) { return t > 0.0 ? std::pow(t, gam) : 0.0; };
  return (t1 - t0) * (a * (t1 + t0) - b) + (c == 0.0 ? 0.0 : c * (s(t1) - s(t0)));
}

double node_solve(double a, double b, double w, double lam, double gam, double upper) {
  const double c = lam * w;
  if (!(upper > 0.0)) return 0.0;
  if (c == 0.0) return std::clamp(b / (2.0 * a), 0.0, upper);

  double cand = -1.0;  // interior candidate in (0, upper], if any
  if (gam == 0.0 || gam == 1.0) {
    const double v = (gam == 0.0 ? b : b - c) / (2.0 * a);
    if (v > 0.0) cand = std::min(v, upper);
  } else if (gam > 1.0) {
    // Convex; q'(0+) = -b.
    if (b > 0.0) {
      const double hi = b / (2.0 * a);
      cand = std::min(derivative_root(a, b, c, gam, 0.0, hi), upper);
    }
  } else {
    // 0 < gam < 1: q' falls from +inf to its minimum at ts, then increases.
    const double ts = std::pow(c * gam * (1.0 - gam) / (2.0 * a), 1.0 / (2.0 - gam));
    const double dq_min = 2.0 * a * ts - b + c * gam * std::pow(ts, gam - 1.0);
    if (dq_min < 0.0) {
      if (ts >= upper) {
        cand = upper;
      } else {
        const double hi = b / (2.0 * a);
        cand = std::min(derivative_root(a, b, c, gam, ts, hi), upper);
      }
    }
  }
  if (cand <= 0.0) return 0.0;
  return node_objective(cand, a, b, w, lam, gam) < 0.0 ? cand : 0.0;
}

std::vector<double> assemble_stiffness(const CoefficientField& a) {
  const Grid& g = a.grid();
  const int n = g.dim();
  const int nc = 1 << n;
  int s = 1;
  for (int d = 0; d < n; ++d) s *= 3;
  std::vector<double> k(g.size() * s, 0.0);
  const Q1Element el(g);
  std::array<std::size_t, 8> corner{};
  std::array<double, 64> kc{};
  double abar[9];
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    g.cell_corners(c, corner);
    std::fill(std::begin(abar), std::end(abar), 0.0);
    for (int q = 0; q < nc; ++q)
      for (int e = 0; e < n * n; ++e) abar[e] += a.entries()[corner[q] * n * n + e];
    for (int e = 0; e < n * n; ++e) abar[e] /= nc;
    el.stiffness(abar, kc);
    for (int p = 0; p < nc; ++p)
      for (int q = 0; q < nc; ++q) {
        int o = 0, pw = 1;
        for (int d = 0; d < n; ++d) {
          o += (((q >> d) & 1) - ((p >> d) & 1) + 1) * pw;
          pw *= 3;
        }
        k[corner[p] * s + o] += kc[p * 8 + q];
      }
  }
  return k;
}

std::vector<double> node_weights(const Grid& grid) {
  std::vector<double> w(grid.size(), 0.0);
  const int nc = 1 << grid.dim();
  const double share = grid.cell_volume() / nc;
  std::array<std::size_t, 8> corner{};
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    grid.cell_corners(c, corner);
    for (int q = 0; q < nc; ++q) w[corner[q]] += share;
  }
  return w;
}

MinimizeResult minimize(const ScalarField& phi, const CoefficientField& a, const ForcingField& lam,
                        const ExponentField& gam, const MinimizeOptions& opts) {
  opts.validate();
  const Grid& g = phi.grid();
  require_same_grid(g, a.grid(), "minimize: phi vs A");
  require_same_grid(g, lam.grid(), "minimize: phi vs lambda");
  require_same_grid(g, gam.grid(), "minimize: phi vs gamma");
  require_admissible(a);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.on_boundary(i) && phi[i] < 0.0) throw Error("minimize: boundary datum phi must be non-negative");

  const Sweeper sweeper(phi, a, lam, gam, opts);
  std::vector<SingleRun> runs(static_cast<std::size_t>(opts.starts));
#pragma omp parallel for schedule(dynamic, 1) if (opts.starts > 1)
  for (int s = 0; s < opts.starts; ++s) runs[s] = sweeper.run(sweeper.initial(s));

  int best = 0;
  for (int s = 1; s < opts.starts; ++s)
    if (runs[s].report.energy_trace.back() < runs[best].report.energy_trace.back()) best = s;

  MinimizeReport rep = runs[best].report;
  rep.best_start = best;
  for (int s = 0; s < opts.starts; ++s) {
    const auto& r = runs[s].report;
    rep.starts.push_back({s, r.energy_trace.back(), r.sweeps_used, r.converged});
  }
  for (int s = 0; s < opts.starts; ++s) {
    if (s == best) continue;
    const double eb = runs[best].report.energy_trace.back();
    const double es = runs[s].report.energy_trace.back();
    if (std::abs(es - eb) > 1e-9 * std::max(std::abs(eb), 1e-300)) continue;
    double diff = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) diff = std::max(diff, std::abs(runs[s].u[i] - runs[best].u[i]));
    if (diff > 1e-6 * std::max(phi.boundary_sup(), 1.0)) rep.near_equal_distinct = true;
  }

  ScalarField u(g, std::move(runs[best].u));
  rep.final_energy = energy(u, a, lam, gam);
  return {std::move(u), std::move(rep)};
}

CompetitorReport sample_competitors(const ScalarField& u, const CoefficientField& a, const ForcingField& lam,
                                    const ExponentField& gam, int count, std::uint64_t seed, double tol) {
  const Grid& g = u.grid();
  const double e0 = energy(u, a, lam, gam).total;
  double scale = 1e-3;
  for (double v : u.values()) scale = std::max(scale, std::abs(v));
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!g.on_boundary(i)) interior.push_back(i);
  CompetitorReport rep;
  rep.tol = tol;
  rep.worst_margin = kInf;
  if (interior.empty()) return rep;
  std::mt19937_64 rng(mix(seed, 0xc0ffeeULL));
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  double extent = kInf;
  for (int d = 0; d < g.dim(); ++d) extent = std::min(extent, g.upper(d) - g.lower(d));
  const double h = g.mesh_size();
  for (int k = 0; k < count; ++k) {
    const Point c = g.coord(interior[rng() % interior.size()]);
    const double rho = 2.0 * h + uniform() * std::max(0.25 * extent - 2.0 * h, 0.0);
    const double amp = (2.0 * uniform() - 1.0) * scale * std::pow(10.0, -4.0 * uniform());
    std::vector<double> v = u.values();
    for (std::size_t i : interior) {
      const double s = distance(g.coord(i), c, g.dim()) / rho;
      if (s < 1.0) v[i] += amp * (1.0 - s * s) * (1.0 - s * s);
    }
    const double margin = energy(ScalarField(g, std::move(v)), a, lam, gam).total - e0;
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < -tol) ++rep.violations;
    ++rep.count;
  }
  return rep;
}

}  // namespace fbs
