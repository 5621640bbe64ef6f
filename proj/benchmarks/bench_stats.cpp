#include <benchmark/benchmark.h>

#include "nimai/eval/stats.hpp"
#include "nimai/rng.hpp"

namespace {

static void BM_KruskalWallis(benchmark::State& state) {
  const auto per_group = std::size_t(state.range(0));
  nimai::RngStream rng(5);
  std::vector<std::vector<double>> groups(4);
  for (auto& g : groups)
    for (std::size_t i = 0; i < per_group; ++i)
      g.push_back(rng.uniform(0.0, 100.0));
  for (auto _ : state) {
    auto res = nimai::kruskal_wallis(groups);
    benchmark::DoNotOptimize(res.h);
  }
}

}  // namespace

BENCHMARK(BM_KruskalWallis)->Arg(10)->Arg(100)->Arg(1000);

BENCHMARK_MAIN();
