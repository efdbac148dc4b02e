#include "fbs/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbs/error.hpp"

namespace fbs {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
const double kE = std::exp(1.0);
}  // namespace

ModulusOfContinuity ModulusOfContinuity::zero() { return {}; }

ModulusOfContinuity ModulusOfContinuity::linear(double slope) {
  if (!(slope > 0.0)) throw Error("linear modulus needs a positive slope");
  ModulusOfContinuity m;
  m.kind_ = Kind::Linear;
  m.scale_ = slope;
  return m;
}

ModulusOfContinuity ModulusOfContinuity::power(double alpha, double scale) {
  if (!(alpha > 0.0) || !(scale > 0.0)) throw Error("power modulus needs alpha > 0 and scale > 0");
  ModulusOfContinuity m;
  m.kind_ = Kind::Power;
  m.alpha_ = alpha;
  m.scale_ = scale;
  return m;
}

ModulusOfContinuity ModulusOfContinuity::log_type(double scale) {
  if (!(scale > 0.0)) throw Error("log modulus needs scale > 0");
  ModulusOfContinuity m;
  m.kind_ = Kind::Log;
  m.scale_ = scale;
  return m;
}

ModulusOfContinuity ModulusOfContinuity::tabulated(std::vector<double> t, std::vector<double> w) {
  if (t.size() != w.size() || t.size() < 2) throw Error("tabulated modulus needs at least two (t, w) samples");
  if (t[0] != 0.0 || w[0] != 0.0) throw Error("tabulated modulus must start at omega(0) = 0");
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (!(t[k] > t[k - 1])) throw Error("tabulated modulus: sample abscissae must be strictly increasing");
    if (w[k] < w[k - 1]) throw Error("tabulated modulus is not monotone at sample " + std::to_string(k));
    if (!std::isfinite(w[k])) throw Error("tabulated modulus: non-finite sample");
  }
  ModulusOfContinuity m;
  m.kind_ = Kind::Tabulated;
  m.t_ = std::move(t);
  m.w_ = std::move(w);
  return m;
}

ModulusOfContinuity ModulusOfContinuity::from_json(const nlohmann::json& spec, const std::string& path) {
  if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string())
    throw ConfigError(path, "modulus spec needs a string \"kind\"");
  const std::string kind = spec["kind"].get<std::string>();
  try {
    if (kind == "zero") return zero();
    if (kind == "linear") return linear(spec.at("L").get<double>());
    if (kind == "power") return power(spec.at("alpha").get<double>(), spec.value("L", 1.0));
    if (kind == "log") return log_type(spec.value("L", 1.0));
    if (kind == "tabulated")
      return tabulated(spec.at("t").get<std::vector<double>>(), spec.at("w").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path, "unknown modulus kind \"" + kind + "\"");
}

nlohmann::json ModulusOfContinuity::to_json() const {
  switch (kind_) {
    case Kind::Zero: return {{"kind", "zero"}};
    case Kind::Linear: return {{"kind", "linear"}, {"L", scale_}};
    case Kind::Power: return {{"kind", "power"}, {"alpha", alpha_}, {"L", scale_}};
    case Kind::Log: return {{"kind", "log"}, {"L", scale_}};
    case Kind::Tabulated: return {{"kind", "tabulated"}, {"t", t_}, {"w", w_}};
  }
  return {};
}

double ModulusOfContinuity::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Linear: return scale_ * t;
    case Kind::Power: return scale_ * std::pow(t, alpha_);
    case Kind::Log: return t >= kE ? kInf : scale_ / std::log(kE / t);
    case Kind::Tabulated: {
      if (t >= t_.back()) return w_.back();
      const auto it = std::upper_bound(t_.begin(), t_.end(), t);
      const std::size_t k = static_cast<std::size_t>(it - t_.begin());
      const double s = (t - t_[k - 1]) / (t_[k] - t_[k - 1]);
      return w_[k - 1] + s * (w_[k] - w_[k - 1]);
    }
  }
  return 0.0;
}

double ModulusOfContinuity::inverse_bisect(double nu, double lo, double hi) const {
  if ((*this)(hi) < nu) return kInf;
  if ((*this)(lo) >= nu) return lo;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if ((*this)(mid) >= nu)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double ModulusOfContinuity::inverse(double nu) const {
  if (nu <= 0.0) return 0.0;
  switch (kind_) {
    case Kind::Zero: return kInf;
    case Kind::Linear: return nu / scale_;
    case Kind::Power: return std::pow(nu / scale_, 1.0 / alpha_);
    case Kind::Log: return kE * std::exp(-scale_ / nu);
    case Kind::Tabulated: {
      if (w_.back() < nu) return kInf;
      // Leftmost preimage: first segment whose right end reaches nu.
      for (std::size_t k = 1; k < t_.size(); ++k)
        if (w_[k] >= nu) return inverse_bisect(nu, t_[k - 1], t_[k]);
      return kInf;
    }
  }
  return kInf;
}

DiniCheck dini_check(const ModulusOfContinuity& omega, int k_max, double cap) {
  if (k_max < 16) throw Error("dini_check needs k_max >= 16");
  DiniCheck out;
  double sum = 0.0;
  int quiet = 0;
  for (int k = 1; k <= k_max; ++k) {
    const double inc = omega(std::ldexp(1.0, -k));
    sum += inc;
    out.partial_sums.push_back(sum);
    out.terms = k;
    if (sum > cap) {
      out.status = DiniStatus::Diverged;
      break;
    }
    quiet = (inc == 0.0 || inc < 1e-12 * sum) ? quiet + 1 : 0;
    if (quiet >= 8) {
      out.status = DiniStatus::Converged;
      break;
    }
  }
  out.partial_sum = sum;
  out.dini = out.status == DiniStatus::Converged;
  return out;
}

const char* to_string(DiniStatus s) {
  switch (s) {
    case DiniStatus::Converged: return "converged";
    case DiniStatus::Diverged: return "diverged";
    case DiniStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

}  // namespace fbs
