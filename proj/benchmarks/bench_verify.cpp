#include <benchmark/benchmark.h>

#include "lstmcert/model.hpp"
#include "lstmcert/rng.hpp"
#include "lstmcert/verifier.hpp"

using namespace lstmcert;

namespace {

std::vector<Eigen::VectorXd> bench_sequence(const LstmNetwork& net, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> seq;
  for (int t = 0; t < net.num_frames; ++t) {
    Eigen::VectorXd v(net.input_dim);
    for (int i = 0; i < net.input_dim; ++i) v(i) = rng.uniform(-1, 1);
    seq.push_back(std::move(v));
  }
  return seq;
}

void BM_Forward(benchmark::State& state) {
  const LstmNetwork net = random_network(4, 8, static_cast<int>(state.range(0)), 1, 10, 42);
  const auto seq = bench_sequence(net, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(net, seq));
  }
}
BENCHMARK(BM_Forward)->Arg(8)->Arg(32)->Arg(128);

void BM_SinglePlanePass(benchmark::State& state) {
  const LstmNetwork net = random_network(2, 2, static_cast<int>(state.range(0)), 1, 3, 42);
  const auto seq = bench_sequence(net, 7);
  PerturbationSpec spec;
  spec.epsilon = 0.01;
  RelaxConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_pipeline(net, seq, spec, cfg));
  }
}
BENCHMARK(BM_SinglePlanePass)->Arg(2)->Arg(4);

void BM_VerifySample(benchmark::State& state) {
  const LstmNetwork net = random_network(2, 2, 3, 1, 3, 42);
  VerificationQuery query;
  query.sample = bench_sequence(net, 7);
  query.true_label = predict(net, query.sample);
  query.spec.epsilon = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(verify_sample(net, query));
  }
}
BENCHMARK(BM_VerifySample);

}  // namespace

BENCHMARK_MAIN();
