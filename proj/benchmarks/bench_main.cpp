#include <numbers>
#include <random>

#include <benchmark/benchmark.h>

#include <ppcr/association.hpp>
#include <ppcr/neighbor_search.hpp>
#include <ppcr/optimizer.hpp>
#include <ppcr/registration.hpp>
#include <ppcr/synthetic.hpp>

namespace {

using namespace ppcr;

void BM_IndexBuild(benchmark::State& state) {
  const auto cloud = synthetic::random_cube(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    SpatialIndex index(cloud);
    benchmark::DoNotOptimize(index.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IndexBuild)->Arg(2000)->Arg(20000);

void BM_KNearest(benchmark::State& state) {
  const auto cloud = synthetic::random_cube(20000, 2);
  const auto queries = synthetic::random_cube(1000, 3);
  const SpatialIndex index(cloud);
  std::vector<Neighbor> hits;
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    for (const auto& q : queries) {
      index.k_nearest_within(q, k, 0.2, hits);
      benchmark::DoNotOptimize(hits.data());
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(queries.size()));
}
BENCHMARK(BM_KNearest)->Arg(1)->Arg(10)->Arg(30);

void BM_TWeights(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> r(10);
  for (auto& x : r) {
    x = u(rng);
  }
  std::vector<double> p(r.size());
  std::vector<double> w(r.size());
  const auto model = WeightModel::t_distribution();
  for (auto _ : state) {
    compute_weights(model, r, p, w);
    benchmark::DoNotOptimize(w.data());
  }
}
BENCHMARK(BM_TWeights);

void BM_InnerSolve(benchmark::State& state) {
  const auto problem = synthetic::cube_problem(2000, 10.0 * std::numbers::pi / 180.0, 0.05, 5);
  const SpatialIndex index(problem.target);
  const auto set = associate(problem.source, index, RigidTransform(), 10, 0.45);
  const auto weighted = WeightedProblem::from_associations(problem.source, problem.target, set, RigidTransform(), WeightModel::t_distribution());
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(weighted).final_cost);
  }
}
BENCHMARK(BM_InnerSolve)->Unit(benchmark::kMillisecond);

void BM_Register(benchmark::State& state) {
  const auto problem = synthetic::cube_problem(2000, 10.0 * std::numbers::pi / 180.0, 0.05, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(register_clouds(problem.source, problem.target, RigidTransform(), RegistrationConfig{}).trace.size());
  }
}
BENCHMARK(BM_Register)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
