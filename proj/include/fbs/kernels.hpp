#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// fbs::kernels::serial and an OpenMP version in fbs::kernels::omp with the same
// signature. Reductions in both sum fixed-size blocks and combine the block
// partials in order, so the two agree bit for bit at any thread count.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "fbs/grid.hpp"
#include "fbs/q1.hpp"

namespace fbs::kernels {

inline constexpr std::size_t kBlock = 1024;

struct EnergyTerms {
  double dirichlet = 0.0;
  double singular = 0.0;
};

/// Inputs of the discrete functional: Q1 Dirichlet energy with the corner-mean
/// matrix per cell, plus the node-lumped singular term lambda u^gamma over
/// corners with u > zero_tol. Only cells with cell_mask != 0 contribute.
struct EnergyInputs {
  const Grid* grid = nullptr;
  const Q1Element* element = nullptr;
  std::span<const double> u;
  std::span<const double> a_entries;  // n*n per node
  std::span<const double> lambda;
  std::span<const double> gamma;
  std::span<const unsigned char> cell_mask;
  double zero_tol = 0.0;
};

/// Flux-form (2n+1)-point operator  (L x)_i = sum_d sum_{+-} c_face (x_i - x_nb) / h_d^2,
/// i.e. -div(A grad x), evaluated at nodes with active[i] != 0.
struct FluxStencil {
  const Grid* grid = nullptr;
  std::array<std::vector<double>, kMaxDim> face;  // face[d][i]: coefficient between i and i + e_d
  std::vector<unsigned char> active;
};

namespace serial {
EnergyTerms energy(const EnergyInputs& in);
void apply_flux(const FluxStencil& st, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
/// out[i] = min over set of |x_i - x_s|; +inf when the set is empty.
void distance_to_set(const Grid& grid, std::span<const std::size_t> set, std::span<double> out);
}  // namespace serial

namespace omp {
EnergyTerms energy(const EnergyInputs& in);
void apply_flux(const FluxStencil& st, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
void distance_to_set(const Grid& grid, std::span<const std::size_t> set, std::span<double> out);
}  // namespace omp

/// Dirichlet and singular contributions of a single cell; shared by both variants.
EnergyTerms cell_energy(const EnergyInputs& in, std::size_t cell);

/// Diagonal of the flux operator at node i.
double flux_diagonal(const FluxStencil& st, std::size_t i);

}  // namespace fbs::kernels
