#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "nlcap/hvspace.hpp"
#include "nlcap/infotheory.hpp"
#include "nlcap/quantum.hpp"
#include "nlcap/solver.hpp"

using namespace nlcap;

namespace {

NSBox werner13(double gamma) {
  const auto m = cube13_measurements();
  return werner_box(gamma, m, m);
}

void BM_CapacityCube13(benchmark::State& state) {
  const HVBox hv = product_hvbox(werner13(0.85));
  const Channel w = channel_of(hv);
  CapacityOptions opts;
  opts.tol_bits = 1e-7;
  opts.newton_steps = state.range(0) != 0;
  opts.max_relaxation = 1e4;
  for (auto _ : state) benchmark::DoNotOptimize(channel_capacity(w, opts).capacity_bits);
}
BENCHMARK(BM_CapacityCube13)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_IpfCube13(benchmark::State& state) {
  const NSBox box = werner13(0.85);
  const HVBox hv = product_hvbox(box);
  const auto& blk = hv.blocks().front();
  const auto targets = block_targets(box, blk.r, blk.a);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> sigma = blk.sigma;
  double t = 0.0;
  for (double& v : sigma) t += (v *= u(rng));
  for (double& v : sigma) v /= t;
  for (auto _ : state) benchmark::DoNotOptimize(ipf_project(sigma, targets, hv.space()).sweeps);
}
BENCHMARK(BM_IpfCube13)->Unit(benchmark::kMillisecond);

void BM_SolverIterations(benchmark::State& state) {
  const NSBox box = werner13(0.85);
  SolverOptions opts;
  opts.outer_max_iters = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(nonlocal_capacity(box, opts).D_bits);
}
BENCHMARK(BM_SolverIterations)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_PrBox(benchmark::State& state) {
  const NSBox box = pr_box();
  for (auto _ : state) benchmark::DoNotOptimize(nonlocal_capacity(box).D_bits);
}
BENCHMARK(BM_PrBox)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
