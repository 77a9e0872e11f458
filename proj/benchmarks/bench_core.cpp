#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "mcflab/dualtree.hpp"
#include "mcflab/field.hpp"
#include "mcflab/gfunction.hpp"
#include "mcflab/models.hpp"
#include "mcflab/partition.hpp"
#include "mcflab/pde.hpp"

namespace {

using namespace mcflab;

void BM_MajorityG(benchmark::State& state) {
  const auto g = majority_g();
  double p = 0.3;
  for (auto _ : state) {
    p = 0.5 * g(p) + 0.25;
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_MajorityG);

void BM_SimulateTree(benchmark::State& state) {
  const auto m = ternary_bbm(0.25, 2);
  const double t = static_cast<double>(state.range(0)) / 100.0;
  const double x[2] = {0.0, 0.0};
  std::uint64_t seed = 0;
  std::size_t vertices = 0;
  for (auto _ : state) {
    auto tree = simulate_tree(m.spec, x, t, ++seed);
    vertices += tree.leaves().size();
    benchmark::DoNotOptimize(tree);
  }
  state.counters["leaves_per_tree"] = static_cast<double>(vertices) / static_cast<double>(state.iterations());
}
BENCHMARK(BM_SimulateTree)->Arg(5)->Arg(10)->Arg(20);

void BM_ExactVote(benchmark::State& state) {
  const auto tree = regular_tree(3, static_cast<int>(state.range(0)));
  const auto kernel = majority_kernel();
  const LeafProbFn p = [](std::span<const double>) { return 0.6; };
  for (auto _ : state) benchmark::DoNotOptimize(root_vote_prob_exact(tree, p, kernel));
}
BENCHMARK(BM_ExactVote)->Arg(4)->Arg(7);

void BM_EstimateVote(benchmark::State& state) {
  const auto m = ternary_bbm(0.25, 2);
  const double x[2] = {0.1, 0.0};
  const LeafProbFn p = [](std::span<const double> y) { return y[0] < 0.0 ? 0.0 : 1.0; };
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_vote_probability(m.spec, m.kernel, x, 0.1, p, 1000, ++seed));
}
BENCHMARK(BM_EstimateVote)->Unit(benchmark::kMillisecond);

void BM_CoalescencePartition(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(lv_escape_probability(2, 3, 50.0, static_cast<std::size_t>(state.range(0)), 7));
}
BENCHMARK(BM_CoalescencePartition)->Arg(1000)->Unit(benchmark::kMillisecond);

ScalarField circle(std::size_t n) {
  return sample_field(make_field(2, -1.5, 1.5, n),
                      [](std::span<const double> x) { return std::hypot(x[0], x[1]) - 1.0; });
}

void BM_McfStep(benchmark::State& state) {
  const auto u0 = circle(static_cast<std::size_t>(state.range(0)));
  const double h = 3.0 / static_cast<double>(state.range(0) - 1);
  for (auto _ : state) benchmark::DoNotOptimize(evolve_mcf_levelset(u0, 10 * 0.2 * h * h));
  state.SetItemsProcessed(state.iterations() * 10 * state.range(0) * state.range(0));
}
BENCHMARK(BM_McfStep)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SignedDistance(benchmark::State& state) {
  const auto u0 = circle(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(signed_distance(u0));
}
BENCHMARK(BM_SignedDistance)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_AllenCahn(benchmark::State& state) {
  const auto m = ternary_bbm(0.25, 2);
  const auto p0 = sample_field(make_field(2, -2.0, 2.0, 101),
                               [](std::span<const double> x) { return std::hypot(x[0], x[1]) < 1.0 ? 0.0 : 1.0; });
  for (auto _ : state) benchmark::DoNotOptimize(solve_reaction_diffusion(0.25, m.g, 1.0, p0, 0.05));
}
BENCHMARK(BM_AllenCahn)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
