#include <benchmark/benchmark.h>

#include "jellium/bergman.hpp"
#include "jellium/wpoly.hpp"

using namespace jellium;

namespace {

MeasureSpec two_circles() {
  const double h = 1.0 / std::sqrt(2.0);
  return MeasureSpec({{h, UniformCircle{1.0}}, {1.0 - h, UniformCircle{2.0}}});
}

void BM_RadialNorms(benchmark::State& st) {
  const int N = static_cast<int>(st.range(0));
  const auto m = MeasureSpec::uniform_disk();
  for (auto _ : st) benchmark::DoNotOptimize(radial_log_norms(m, {N, N + 1.0}));
}
BENCHMARK(BM_RadialNorms)->RangeMultiplier(4)->Range(64, 4096);

void BM_RadialDiag(benchmark::State& st) {
  const int N = static_cast<int>(st.range(0));
  const KernelEvaluator K(WeightedBasis::build(MeasureSpec::uniform_circle(), {N, N + 1.0}));
  double r = 1.25;
  for (auto _ : st) {
    benchmark::DoNotOptimize(K.diag(r));
    r = r < 3.0 ? r + 0.01 : 1.25;
  }
}
BENCHMARK(BM_RadialDiag)->RangeMultiplier(4)->Range(64, 4096);

void BM_GeneralBasisBuild(benchmark::State& st) {
  const int N = static_cast<int>(st.range(0));
  const auto m = two_circles();
  for (auto _ : st)
    benchmark::DoNotOptimize(WeightedBasis::build(m, {N, N + 1.0}, BasisPath::General));
}
BENCHMARK(BM_GeneralBasisBuild)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_AnnulusSeries(benchmark::State& st) {
  double r = 1.05;
  for (auto _ : st) {
    benchmark::DoNotOptimize(annulus_weighted_diag(1.0, 2.0, 0.3, r));
    r = r < 1.95 ? r + 0.01 : 1.05;
  }
}
BENCHMARK(BM_AnnulusSeries);

void BM_RationalBergman(benchmark::State& st) {
  RationalDomain d{Circle{0.0, 2.0}, {Circle{0.0, 1.0}}, {}};
  for (auto _ : st) benchmark::DoNotOptimize(RationalBergman(d, {0.3}));
}
BENCHMARK(BM_RationalBergman)->Unit(benchmark::kMillisecond);

}  // namespace
