// Serial reference kernels against their OpenMP counterparts.
//
//   fbs_bench --benchmark_filter=Energy

#include <benchmark/benchmark.h>

#include <random>

#include "fbs/catalog.hpp"
#include "fbs/elliptic.hpp"
#include "fbs/kernels.hpp"

namespace {

using namespace fbs;

struct EnergySetup {
  Grid grid;
  Q1Element element;
  CoefficientField a;
  std::vector<double> u, lam, gam;
  std::vector<unsigned char> mask;

  explicit EnergySetup(int nodes)
      : grid(Grid::box(2, nodes)),
        element(grid),
        a(sample_coefficient({{"type", "random"}, {"seed", 1}}, grid, 0.3)),
        u(sample_values({{"type", "random"}, {"seed", 2}}, grid)),
        lam(sample_values({{"type", "random"}, {"seed", 3}}, grid)),
        gam(sample_values({{"type", "random"}, {"seed", 4}, {"low", 0.2}, {"high", 1.8}}, grid)),
        mask(grid.cell_count(), 1) {}

  kernels::EnergyInputs inputs() const { return {&grid, &element, u, a.entries(), lam, gam, mask, 0.0}; }
};

template <kernels::EnergyTerms (*Kernel)(const kernels::EnergyInputs&)>
void Energy(benchmark::State& state) {
  const EnergySetup s(static_cast<int>(state.range(0)));
  const auto in = s.inputs();
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(in));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.grid.cell_count()));
}

template <void (*Kernel)(const kernels::FluxStencil&, std::span<const double>, std::span<double>)>
void Flux(benchmark::State& state) {
  const Grid g = Grid::box(2, static_cast<int>(state.range(0)));
  const CoefficientField a = sample_coefficient({{"type", "random"}, {"seed", 5}}, g, 0.3);
  std::vector<unsigned char> active(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) active[i] = !g.on_boundary(i);
  const kernels::FluxStencil st = build_flux_stencil(a, active);
  const std::vector<double> x = sample_values({{"type", "random"}, {"seed", 6}}, g);
  std::vector<double> y(g.size());
  for (auto _ : state) {
    Kernel(st, x, y);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}

template <double (*Kernel)(std::span<const double>, std::span<const double>)>
void Dot(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = U(rng), b[i] = U(rng);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <void (*Kernel)(const Grid&, std::span<const std::size_t>, std::span<double>)>
void Distance(benchmark::State& state) {
  const Grid g = Grid::box(2, static_cast<int>(state.range(0)));
  std::vector<std::size_t> set;
  const int n = g.nodes(0);
  for (int k = 0; k < n; ++k) set.push_back(g.id(Index{k, n / 2, 0}));
  std::vector<double> out(g.size());
  for (auto _ : state) {
    Kernel(g, set, out);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}

}  // namespace

BENCHMARK(Energy<fbs::kernels::serial::energy>)->Name("Energy/serial")->Arg(129)->Arg(257)->Arg(513);
BENCHMARK(Energy<fbs::kernels::omp::energy>)->Name("Energy/omp")->Arg(129)->Arg(257)->Arg(513)->UseRealTime();
BENCHMARK(Flux<fbs::kernels::serial::apply_flux>)->Name("Flux/serial")->Arg(257)->Arg(1025);
BENCHMARK(Flux<fbs::kernels::omp::apply_flux>)->Name("Flux/omp")->Arg(257)->Arg(1025)->UseRealTime();
BENCHMARK(Dot<fbs::kernels::serial::dot>)->Name("Dot/serial")->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(Dot<fbs::kernels::omp::dot>)->Name("Dot/omp")->Arg(1 << 16)->Arg(1 << 20)->UseRealTime();
BENCHMARK(Distance<fbs::kernels::serial::distance_to_set>)->Name("Distance/serial")->Arg(129)->Arg(257);
BENCHMARK(Distance<fbs::kernels::omp::distance_to_set>)->Name("Distance/omp")->Arg(129)->Arg(257)->UseRealTime();

BENCHMARK_MAIN();
