#include <benchmark/benchmark.h>

#include "mixdyn/chain.hpp"
#include "mixdyn/flows.hpp"

using namespace mixdyn;

namespace {

void BM_BuildGraphCat(benchmark::State& state) {
  const MapSystem sys = make_system("cat_map");
  const BoxSet cover = initial_cover(sys.domain, static_cast<int>(state.range(0)));
  GraphOptions o;
  o.workers = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(sys, cover, cover.max_width(), o).edge_count());
  state.SetItemsProcessed(state.iterations() * static_cast<long>(cover.size()));
}
BENCHMARK(BM_BuildGraphCat)->Args({6, 1})->Args({8, 1})->Args({8, 4})->Unit(benchmark::kMillisecond);

void BM_Decompose(benchmark::State& state) {
  const MapSystem sys = make_system("nested_rings");
  const BoxSet cover = initial_cover(sys.domain, static_cast<int>(state.range(0)));
  const TransitionGraph g = build_graph(sys, cover, cover.max_width() / 2);
  for (auto _ : state) benchmark::DoNotOptimize(decompose(g).scc_count());
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.edge_count()));
}
BENCHMARK(BM_Decompose)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Classify(benchmark::State& state) {
  const MapSystem sys = make_system("cubic_interval");
  const BoxSet cover = initial_cover(sys.domain, 12);
  const TransitionGraph g = build_graph(sys, cover, cover.max_width() / 4);
  const ChainDecomposition dec = decompose(g);
  for (auto _ : state) benchmark::DoNotOptimize(classify(g, dec));
}
BENCHMARK(BM_Classify)->Unit(benchmark::kMicrosecond);

void BM_NormalFormMap(benchmark::State& state) {
  const MapSystem sys = make_system("nf_timeq", {{"step", state.range(0) == 0 ? 1e-2 : 1e-3}});
  Point x{0.1, 0.05};
  for (auto _ : state) {
    x = sys.forward(x);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_NormalFormMap)->Arg(0)->Arg(1);

void BM_LimitFlow(benchmark::State& state) {
  auto f = [](flows::Vec2 v) { return flows::limit_field(v.a, v.b, 0.2, 2.5); };
  for (auto _ : state) benchmark::DoNotOptimize(flows::flow_map(f, flows::Vec2{2.0, 0.3}, 10.0, 1e-3));
}
BENCHMARK(BM_LimitFlow)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
