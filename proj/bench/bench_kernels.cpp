// Serial reference vs OpenMP kernels on a Laplacian weight tensor.

#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "gq/kernels.hpp"
#include "gq/quantizer.hpp"
#include "gq/random.hpp"

namespace {

using namespace gq;

struct Inputs {
  std::vector<double> w;
  std::vector<double> z;
};

Inputs make_inputs(std::size_t n, int bits) {
  Rng rng(42);
  Inputs in;
  in.w.resize(n);
  for (auto& x : in.w) x = rng.laplace(0.1);
  in.z = build_centroids(bits, {8.0, MuLawMode::standard}).snapped.values;
  return in;
}

constexpr double kAlpha = 400.0;

template <bool Parallel>
void BM_SoftQuantize(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)), static_cast<int>(state.range(1)));
  std::vector<double> out(in.w.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::soft_quantize(in.w, in.z, kAlpha, out);
    } else {
      kernels::serial::soft_quantize(in.w, in.z, kAlpha, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_HardQuantize(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)), static_cast<int>(state.range(1)));
  std::vector<double> values(in.w.size());
  std::vector<std::uint32_t> indices(in.w.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::hard_quantize(in.w, in.z, values, indices);
    } else {
      kernels::serial::hard_quantize(in.w, in.z, values, indices);
    }
    benchmark::DoNotOptimize(values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_SoftSquaredError(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    double e = Parallel ? kernels::parallel::soft_squared_error(in.w, in.z, kAlpha)
                        : kernels::serial::soft_squared_error(in.w, in.z, kAlpha);
    benchmark::DoNotOptimize(e);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (std::int64_t n : {1 << 14, 1 << 18}) {
    for (std::int64_t bits : {4, 8}) b->Args({n, bits});
  }
  b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_SoftQuantize<false>)->Name("soft_quantize/serial")->Apply(sizes);
BENCHMARK(BM_SoftQuantize<true>)->Name("soft_quantize/parallel")->Apply(sizes);
BENCHMARK(BM_HardQuantize<false>)->Name("hard_quantize/serial")->Apply(sizes);
BENCHMARK(BM_HardQuantize<true>)->Name("hard_quantize/parallel")->Apply(sizes);
BENCHMARK(BM_SoftSquaredError<false>)->Name("soft_squared_error/serial")->Apply(sizes);
BENCHMARK(BM_SoftSquaredError<true>)->Name("soft_squared_error/parallel")->Apply(sizes);

BENCHMARK_MAIN();
