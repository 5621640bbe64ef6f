#include <benchmark/benchmark.h>

#include "nimai/rng.hpp"
#include "nimai/vqvae.hpp"

namespace {

static void BM_Quantize(benchmark::State& state) {
  const auto k = std::size_t(state.range(0));
  const std::size_t d = 16, l = 32;
  nimai::RngStream rng(1);
  nimai::Codebook cb;
  cb.size = k;
  cb.dim = d;
  cb.vectors.resize(k * d);
  for (auto& v : cb.vectors) v = rng.uniform(-1.0, 1.0);
  nimai::Mat z(l, d);
  for (auto& v : z.a) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    auto q = nimai::quantize(z, cb);
    benchmark::DoNotOptimize(q.tokens.data());
  }
}

}  // namespace

BENCHMARK(BM_Quantize)->Arg(32)->Arg(128)->Arg(1024);
