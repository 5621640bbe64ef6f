#include <benchmark/benchmark.h>

#include "nimai/nn/layers.hpp"
#include "nimai/rng.hpp"

namespace {

static void BM_StackForward(benchmark::State& state) {
  const auto layers = std::size_t(state.range(0));
  nimai::nn::ParamStore ps;
  nimai::nn::TransformerStack stack;
  stack.reg(ps, "s", {layers, 4, 64, 16});
  nimai::RngStream rng(2);
  stack.init(ps, rng);
  nimai::Mat x(9, 16);
  for (auto& v : x.a) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    nimai::nn::TransformerStack::Cache cache;
    nimai::Mat y = stack.forward(ps, x, cache);
    benchmark::DoNotOptimize(y.a.data());
  }
}

static void BM_StackBackward(benchmark::State& state) {
  const auto layers = std::size_t(state.range(0));
  nimai::nn::ParamStore ps;
  nimai::nn::TransformerStack stack;
  stack.reg(ps, "s", {layers, 4, 64, 16});
  nimai::RngStream rng(3);
  stack.init(ps, rng);
  nimai::Mat x(9, 16);
  for (auto& v : x.a) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    nimai::nn::TransformerStack::Cache cache;
    nimai::Mat y = stack.forward(ps, x, cache);
    ps.zero_grads();
    nimai::Mat dx = stack.backward(ps, cache, y);
    benchmark::DoNotOptimize(dx.a.data());
  }
}

}  // namespace

BENCHMARK(BM_StackForward)->Arg(1)->Arg(2)->Arg(4);
BENCHMARK(BM_StackBackward)->Arg(1)->Arg(2)->Arg(4);
