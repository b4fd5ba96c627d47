#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "curveflow/flow.hpp"
#include "curveflow/geometry.hpp"
#include "curveflow/grid.hpp"
#include "curveflow/presets.hpp"
#include "curveflow/symfunc.hpp"

using namespace curveflow;

static std::vector<ConeVector> random_cone_points(int n, int count) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(0.1, 5.0);
  std::vector<ConeVector> out;
  for (int k = 0; k < count; ++k) {
    SmallVector v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    out.emplace_back(v);
  }
  return out;
}

static void BM_SigmaK(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto points = random_cone_points(n, 64);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sigma_k(points[i++ % points.size()], n / 2 + 1));
  }
}
BENCHMARK(BM_SigmaK)->Arg(2)->Arg(4)->Arg(8);

static void BM_FAndFij(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CurvatureFunction f = CurvatureFunction::combined(n, 1);
  std::vector<SmallMatrix> mats;
  for (const ConeVector& c : random_cone_points(n, 64)) {
    SmallMatrix a = SmallMatrix::diagonal(c.entries());
    for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = 0.05;
    mats.push_back(a);
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(F_and_Fij(mats[i++ % mats.size()], f));
  }
}
BENCHMARK(BM_FAndFij)->Arg(2)->Arg(3)->Arg(5);

static void BM_GridDifferentiate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Domain domain = build_domain(DomainSpec::disk(1.0));
  const Grid grid(domain, n, n);
  ScalarField u = sample_field(grid, sphere_cap_initial(2.0).value);
  for (auto _ : state) {
    benchmark::DoNotOptimize(differentiate(grid, u));
  }
  state.SetItemsProcessed(state.iterations() * grid.unknown_count());
}
BENCHMARK(BM_GridDifferentiate)->Arg(32)->Arg(64)->Arg(128);

static FlowConfig step_config(int n, TimeScheme scheme) {
  FlowConfig cfg;
  cfg.n_rho = n;
  cfg.n_theta = n;
  cfg.forcing = sphere_forcing(1.0, 2.0);
  cfg.initial = sphere_approach_initial(1.0, 2.0, 1.6);
  cfg.scheme = scheme;
  cfg.threads = 1;
  return cfg;
}

static void BM_ExplicitStep(benchmark::State& state) {
  FlowEngine engine(step_config(static_cast<int>(state.range(0)), TimeScheme::kExplicit));
  const FlowState start = engine.initial_state();
  const double dt = engine.stable_dt(start);
  for (auto _ : state) {
    benchmark::DoNotOptimize(engine.step(start, dt));
  }
}
BENCHMARK(BM_ExplicitStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_ImplicitStep(benchmark::State& state) {
  FlowEngine engine(step_config(static_cast<int>(state.range(0)), TimeScheme::kImplicit));
  const FlowState start = engine.initial_state();
  for (auto _ : state) {
    benchmark::DoNotOptimize(engine.step(start, 0.01));
  }
}
BENCHMARK(BM_ImplicitStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  ::benchmark::Initialize(&argc, argv);
  if (::benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  ::benchmark::RunSpecifiedBenchmarks();
  ::benchmark::Shutdown();
  return 0;
}
