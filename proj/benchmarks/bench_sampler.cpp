#include <benchmark/benchmark.h>

#include "jellium/sampler.hpp"

using namespace jellium;

namespace {

void BM_Hkpv(benchmark::State& st) {
  const int N = static_cast<int>(st.range(0));
  const HkpvSampler s(std::make_shared<const KernelEvaluator>(
      WeightedBasis::build(MeasureSpec::uniform_circle(), {N, N + 1.0})));
  std::uint64_t r = 0;
  for (auto _ : st) {
    RngStream rng(1, 2, r++);
    benchmark::DoNotOptimize(s.sample(rng));
  }
}
BENCHMARK(BM_Hkpv)->RangeMultiplier(4)->Range(16, 256)->Unit(benchmark::kMillisecond);

void BM_Kostlan(benchmark::State& st) {
  const int N = static_cast<int>(st.range(0));
  const KostlanSampler s(MeasureSpec::uniform_disk(), {N, N + 1.0});
  std::uint64_t r = 0;
  for (auto _ : st) {
    RngStream rng(1, 3, r++);
    benchmark::DoNotOptimize(s.moduli(rng));
  }
}
BENCHMARK(BM_Kostlan)->RangeMultiplier(4)->Range(64, 4096);

void BM_Bruteforce(benchmark::State& st) {
  const int N = static_cast<int>(st.range(0));
  const BruteforceSampler s(MeasureSpec::uniform_circle(), N + 1.0, N);
  std::uint64_t r = 0;
  for (auto _ : st) {
    RngStream rng(1, 4, r++);
    benchmark::DoNotOptimize(s.sample(rng));
  }
}
BENCHMARK(BM_Bruteforce)->DenseRange(1, 3);

void BM_GafZeros(benchmark::State& st) {
  const GafModel m{static_cast<int>(st.range(0))};
  std::uint64_t r = 0;
  for (auto _ : st) {
    RngStream rng(1, 5, r++);
    benchmark::DoNotOptimize(gaf_zeros_sample(m, rng));
  }
}
BENCHMARK(BM_GafZeros)->RangeMultiplier(2)->Range(16, 128);

}  // namespace
