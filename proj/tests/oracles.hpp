#pragma once

// Independent reference computations used by the tests. None of these reuse
// the library's quadrature, stencil or solver code.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "fbs/fields.hpp"

namespace oracle {

/// Gauss-Legendre quadrature (3 points per axis) of <A grad u_h, grad u_h> over
/// every cell, u_h the multilinear interpolant and A the corner mean, plus the
/// trapezoid-weighted node sum of lambda u^gamma over u > 0.
inline std::array<double, 2> energy(const fbs::ScalarField& u, const fbs::CoefficientField& a,
                                    const fbs::ForcingField& lam, const fbs::ExponentField& gam) {
  const fbs::Grid& g = u.grid();
  const int n = g.dim();
  const double gp[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double dir = 0.0;
  fbs::Index cells{1, 1, 1};
  for (int d = 0; d < n; ++d) cells[d] = g.nodes(d) - 1;
  fbs::Index c{0, 0, 0};
  const int corners = 1 << n;
  for (c[0] = 0; c[0] < cells[0]; ++c[0])
    for (c[1] = 0; c[1] < cells[1]; ++c[1])
      for (c[2] = 0; c[2] < cells[2]; ++c[2]) {
        double val[8];
        double abar[3][3] = {};
        for (int k = 0; k < corners; ++k) {
          fbs::Index ijk = c;
          for (int d = 0; d < n; ++d) ijk[d] += (k >> d) & 1;
          const std::size_t id = g.id(ijk);
          val[k] = u[id];
          for (int r = 0; r < n; ++r)
            for (int s = 0; s < n; ++s) abar[r][s] += a.entry(id, r, s) / corners;
        }
        int q[3] = {0, 0, 0};
        const int qn[3] = {3, n > 1 ? 3 : 1, n > 2 ? 3 : 1};
        for (q[0] = 0; q[0] < qn[0]; ++q[0])
          for (q[1] = 0; q[1] < qn[1]; ++q[1])
            for (q[2] = 0; q[2] < qn[2]; ++q[2]) {
              double t[3], w = 1.0;
              for (int d = 0; d < n; ++d) {
                t[d] = 0.5 * (1.0 + gp[q[d]]);
                w *= gw[q[d]] * 0.5 * g.spacing(d);
              }
              double grad[3] = {0, 0, 0};
              for (int k = 0; k < corners; ++k)
                for (int d = 0; d < n; ++d) {
                  double prod = 1.0;
                  for (int e = 0; e < n; ++e) {
                    const int bit = (k >> e) & 1;
                    if (e == d)
                      prod *= (bit ? 1.0 : -1.0) / g.spacing(d);
                    else
                      prod *= bit ? t[e] : 1.0 - t[e];
                  }
                  grad[d] += val[k] * prod;
                }
              double f = 0.0;
              for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s) f += abar[r][s] * grad[r] * grad[s];
              dir += w * f;
            }
      }
  double sing = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(u[i] > 0.0)) continue;
    const fbs::Index ijk = g.multi(i);
    double w = 1.0;
    for (int d = 0; d < n; ++d) w *= (ijk[d] == 0 || ijk[d] == g.nodes(d) - 1) ? 0.5 * g.spacing(d) : g.spacing(d);
    sing += w * lam[i] * std::pow(u[i], gam[i]);
  }
  return {dir, sing};
}

/// Brute-force minimiser of a t^2 - b t + c t^gamma [t > 0] over a uniform
/// scan of [0, t_max] (t = 0 included).
inline double scan_minimiser(double a, double b, double c, double gamma, double t_max, int samples) {
  double best_t = 0.0, best_q = 0.0;
  for (int k = 1; k <= samples; ++k) {
    const double t = t_max * k / samples;
    const double q = a * t * t - b * t + c * std::pow(t, gamma);
    if (q < best_q) {
      best_q = q;
      best_t = t;
    }
  }
  return best_t;
}

/// Dense assembly of the 5-point harmonic-face operator on the unknowns of a
/// replacement problem, solved by partial-pivot LU.
inline std::vector<double> dense_replacement(const fbs::ScalarField& u, const fbs::CoefficientField& a,
                                             const std::vector<unsigned char>& unknown) {
  const fbs::Grid& g = u.grid();
  const int n = g.dim();
  std::vector<int> slot(g.size(), -1);
  int m = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (unknown[i]) slot[i] = m++;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (slot[i] < 0) continue;
    const fbs::Index ijk = g.multi(i);
    for (int d = 0; d < n; ++d)
      for (int s : {-1, 1}) {
        fbs::Index nb = ijk;
        nb[d] += s;
        const std::size_t j = g.id(nb);
        const double p = a.entry(i, d, d), q = a.entry(j, d, d);
        const double coef = (2.0 * p * q / (p + q)) / (g.spacing(d) * g.spacing(d));
        K(slot[i], slot[i]) += coef;
        if (slot[j] >= 0)
          K(slot[i], slot[j]) -= coef;
        else
          rhs(slot[i]) += coef * u[j];
      }
  }
  const Eigen::VectorXd x = K.partialPivLu().solve(rhs);
  std::vector<double> h = u.values();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (slot[i] >= 0) h[i] = x(slot[i]);
  return h;
}

/// Per-node Q diag(l) Q^T with Q from a Householder QR of a uniform matrix and
/// l strictly inside [mu, 1/mu].
inline fbs::CoefficientField random_spd(const fbs::Grid& g, double mu, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = g.dim();
  std::vector<double> e(g.size() * n * n, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Eigen::MatrixXd q(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) q(r, c) = 2.0 * unit(rng) - 1.0;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    const Eigen::MatrixXd Q = qr.householderQ();
    Eigen::VectorXd lam(n);
    for (int r = 0; r < n; ++r) lam(r) = mu + (1.0 / mu - mu) * (0.05 + 0.9 * unit(rng));
    const Eigen::MatrixXd M = Q * lam.asDiagonal() * Q.transpose();
    for (int r = 0; r < n; ++r)
      for (int c = r; c < n; ++c) e[i * n * n + r * n + c] = e[i * n * n + c * n + r] = M(r, c);
  }
  return fbs::CoefficientField(g, std::move(e), mu);
}

}  // namespace oracle
