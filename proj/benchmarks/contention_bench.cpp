#include <benchmark/benchmark.h>

#include <random>

#include "micsnet/contention.hpp"
#include "micsnet/scenario.hpp"

using namespace micsnet;

namespace {

ContentionGraph random_graph(std::size_t m, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ActiveLink> links;
  links.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    links.push_back(ActiveLink{NodeId(2 * i), NodeId(2 * i + 1)});
  std::vector<char> adj(m * m, 0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      if (u(rng) < p) adj[a * m + b] = adj[b * m + a] = 1;
  return ContentionGraph::from_adjacency(std::move(links), std::move(adj));
}

void BM_ExactEnumeration(benchmark::State& state) {
  ContentionGraph g = random_graph(std::size_t(state.range(0)), 0.5, 42);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_mics_exact(g, 64));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExactEnumeration)->Arg(8)->Arg(12)->Arg(16)->Arg(20)->Complexity();

void BM_HeuristicEnumeration(benchmark::State& state) {
  ContentionGraph g = random_graph(std::size_t(state.range(0)), 0.5, 42);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_mics_heuristic(g, 256, 7));
}
BENCHMARK(BM_HeuristicEnumeration)->Arg(16)->Arg(32)->Arg(64);

void BM_GraphFromField(benchmark::State& state) {
  Scenario sc = generate_scenario(144, Rect{1600.0, 1600.0}, 25, 1, RadioParams::defaults(), 0.0);
  std::vector<ActiveLink> links;
  for (const Connection& c : sc.connections) links.push_back({c.src, c.dst});
  for (auto _ : state) benchmark::DoNotOptimize(ContentionGraph(links, sc.field, sc.radio));
}
BENCHMARK(BM_GraphFromField);

}  // namespace
