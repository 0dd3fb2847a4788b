#include <benchmark/benchmark.h>

#include "lstmcert/lp.hpp"
#include "lstmcert/refine.hpp"
#include "lstmcert/relax.hpp"
#include "lstmcert/rng.hpp"

using namespace lstmcert;

namespace {

Box2 bench_box() { return Box2{-1.2, 0.8, -0.6, 1.4}; }

void BM_RelaxDistance(benchmark::State& state) {
  RelaxConfig cfg;
  cfg.method = RelaxMethod::Distance;
  for (auto _ : state) {
    benchmark::DoNotOptimize(relax_distance(bench_box(), BivariateKind::SigTanh, cfg));
  }
}
BENCHMARK(BM_RelaxDistance);

void BM_RelaxVolume(benchmark::State& state) {
  RelaxConfig cfg;
  cfg.method = RelaxMethod::Volume;
  for (auto _ : state) {
    benchmark::DoNotOptimize(relax_volume(bench_box(), BivariateKind::SigTanh, cfg));
  }
}
BENCHMARK(BM_RelaxVolume);

void BM_RelaxHybrid(benchmark::State& state) {
  RelaxConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(relax_hybrid(bench_box(), BivariateKind::SigTanh, cfg));
  }
}
BENCHMARK(BM_RelaxHybrid);

void BM_RelaxHybridDensity(benchmark::State& state) {
  RelaxConfig cfg;
  cfg.sample_density = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(relax_hybrid(bench_box(), BivariateKind::SigMul, cfg));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RelaxHybridDensity)->RangeMultiplier(2)->Range(4, 32)->Complexity();

void BM_SoundnessOffset(benchmark::State& state) {
  const PlanePair pair{{0.1, -0.2, -0.8}, {-0.05, 0.15, 0.9}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(soundness_offset(pair, bench_box(), BivariateKind::SigTanh, 64));
  }
}
BENCHMARK(BM_SoundnessOffset);

void BM_CandidatePlanesRec4(benchmark::State& state) {
  RelaxConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        candidate_planes(bench_box(), BivariateKind::SigTanh, DivisionStrategy::Rec4, cfg));
  }
}
BENCHMARK(BM_CandidatePlanesRec4);

}  // namespace

BENCHMARK_MAIN();
