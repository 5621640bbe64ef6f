#include <benchmark/benchmark.h>

#include "nimai/synthesis.hpp"
#include "nimai/toygen.hpp"

namespace {

static void BM_SmoteGenerate(benchmark::State& state) {
  const auto rows = std::size_t(state.range(0));
  nimai::Schema schema = nimai::make_toy_schema(32, 2);
  std::vector<double> c0(32, 0.3), c1(32, 0.7);
  nimai::Dataset data = nimai::make_gaussian_dataset(
      schema, {{c0, 0.08, rows, 0}, {c1, 0.08, rows / 4, 1}}, 4);
  for (auto _ : state) {
    auto batch = nimai::smote_generate(data, 1, 64, 5, 11);
    benchmark::DoNotOptimize(batch.features.a.data());
  }
}

}  // namespace

BENCHMARK(BM_SmoteGenerate)->Arg(256)->Arg(1024);
