#pragma once

#include <json.hpp>
#include <string>
#include <vector>

namespace fbs {

/// Modulus of continuity omega(t), t >= 0, with omega(0) = 0 and omega
/// non-decreasing. Parametric families:
///   zero        omega = 0
///   linear      L t
///   power       L t^alpha            (0 < alpha)
///   log         L / log(e / t)       (defined for 0 < t < e)
///   tabulated   piecewise linear through (t_k, w_k), constant past the last sample
class ModulusOfContinuity {
 public:
  enum class Kind { Zero, Linear, Power, Log, Tabulated };

  static ModulusOfContinuity zero();
  static ModulusOfContinuity linear(double slope);
  static ModulusOfContinuity power(double alpha, double scale = 1.0);
  static ModulusOfContinuity log_type(double scale = 1.0);
  /// Samples must start at t = 0 with w = 0, have strictly increasing t and
  /// non-decreasing w; violations throw rather than being repaired.
  static ModulusOfContinuity tabulated(std::vector<double> t, std::vector<double> w);

  static ModulusOfContinuity from_json(const nlohmann::json& spec, const std::string& path = "omega");
  nlohmann::json to_json() const;

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  double alpha() const { return alpha_; }

  double operator()(double t) const;

  /// Leftmost t >= 0 with omega(t) >= nu. Closed form for the parametric
  /// families, bisection for tabulated data. Returns +inf when omega never
  /// reaches nu.
  double inverse(double nu) const;

  /// Bisection-only inverse on [lo, hi]; exposed for cross-checking the closed forms.
  double inverse_bisect(double nu, double lo, double hi) const;

 private:
  Kind kind_ = Kind::Zero;
  double scale_ = 0.0;
  double alpha_ = 1.0;
  std::vector<double> t_;
  std::vector<double> w_;
};

enum class DiniStatus { Converged, Diverged, Inconclusive };

struct DiniCheck {
  bool dini = false;
  DiniStatus status = DiniStatus::Inconclusive;
  double partial_sum = 0.0;
  int terms = 0;
  /// Partial sums S_K = sum_{k=1}^K omega(2^-k), K = 1..terms.
  std::vector<double> partial_sums;
};

/// Partial sums of omega(2^-k). Converged once the increment stays below
/// 1e-12 of the running sum for 8 consecutive k; Diverged once the sum exceeds
/// `cap`; Inconclusive if k_max is reached first.
DiniCheck dini_check(const ModulusOfContinuity& omega, int k_max, double cap);

const char* to_string(DiniStatus s);

}  // namespace fbs
