// Serial reference kernels against their OpenMP versions on a molecule mesh.
#include <benchmark/benchmark.h>

#include <memory>

#include "h2dft/kernels.hpp"
#include "h2dft/operators.hpp"

namespace {

using namespace h2dft;

struct Fixture {
  std::shared_ptr<const Mesh> mesh;
  std::unique_ptr<FeSpace> space;
  SparseOperator T;
  Vector x, y;

  Fixture() {
    mesh = std::make_shared<const Mesh>(build_molecule_mesh(MeshConfig::for_molecule(1.0, 8, 2)));
    space = std::make_unique<FeSpace>(mesh);
    T = assemble_stiffness(*space);
    x.assign(mesh->num_vertices(), 0.0);
    y.assign(mesh->num_vertices(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = 1.0 / (1.0 + static_cast<double>(i % 97));
      y[i] = 0.5 - static_cast<double>(i % 13) / 13.0;
    }
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

template <double (*Dot)(std::span<const double>, std::span<const double>)>
void BM_dot(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(Dot(f.x, f.y));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.x.size()));
}

template <void (*Axpy)(double, std::span<const double>, std::span<double>)>
void BM_axpy(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) {
    Axpy(1e-9, f.x, f.y);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.x.size()));
}

template <void (*Spmv)(const CsrView&, std::span<const double>, std::span<double>)>
void BM_spmv(benchmark::State& state) {
  auto& f = fixture();
  const CsrView A = f.T.view();
  for (auto _ : state) {
    Spmv(A, f.x, f.y);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(A.vals.size()));
}

BENCHMARK(BM_dot<kernels::serial::dot>)->Name("dot/serial");
BENCHMARK(BM_dot<kernels::parallel::dot>)->Name("dot/openmp");
BENCHMARK(BM_axpy<kernels::serial::axpy>)->Name("axpy/serial");
BENCHMARK(BM_axpy<kernels::parallel::axpy>)->Name("axpy/openmp");
BENCHMARK(BM_spmv<kernels::serial::spmv>)->Name("spmv/serial");
BENCHMARK(BM_spmv<kernels::parallel::spmv>)->Name("spmv/openmp");

}  // namespace

BENCHMARK_MAIN();
