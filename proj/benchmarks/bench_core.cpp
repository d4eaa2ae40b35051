#include <benchmark/benchmark.h>

#include <cmath>

#include "ehstore/limiting_dist.hpp"
#include "ehstore/performance.hpp"
#include "ehstore/sim.hpp"
#include "ehstore/special_math.hpp"

namespace {

using namespace ehstore;

void BM_LambertW(benchmark::State& state) {
  double z = -0.2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lambert_w(WBranch::principal, z));
    z = -0.36 + std::fabs(z) * 0.01;
  }
}
BENCHMARK(BM_LambertW);

void BM_FiniteExactConstruct(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const EffectiveParams eff = effective_from_delta(0.965, 1e-5);
  const BufferSpec buf = BufferSpec::finite(l, eff.m_eff);
  for (auto _ : state) {
    benchmark::DoNotOptimize(finite_exact(eff, buf));
  }
}
BENCHMARK(BM_FiniteExactConstruct)->Arg(4)->Arg(20);

void BM_PdfEval(benchmark::State& state) {
  const EffectiveParams eff = effective_from_delta(0.965, 1e-5);
  const FiniteExactDist d = finite_exact(eff, BufferSpec::finite(20, eff.m_eff));
  double x = 0.0;
  const double stride = d.capacity() / 257.0;
  for (auto _ : state) {
    x += stride;
    if (x >= d.capacity()) x -= d.capacity();
    benchmark::DoNotOptimize(d.pdf(x));
  }
}
BENCHMARK(BM_PdfEval);

void BM_CdfEval(benchmark::State& state) {
  const EffectiveParams eff = effective_from_delta(0.965, 1e-5);
  const FiniteExactDist d = finite_exact(eff, BufferSpec::finite(20, eff.m_eff));
  double x = 0.0;
  const double stride = d.capacity() / 257.0;
  for (auto _ : state) {
    x += stride;
    if (x >= d.capacity()) x -= d.capacity();
    benchmark::DoNotOptimize(d.cdf(x));
  }
}
BENCHMARK(BM_CdfEval);

void BM_SimulateSlots(benchmark::State& state) {
  const EffectiveParams eff = effective_from_delta(0.965, 1e-5);
  const BufferSpec buf = BufferSpec::finite(4, eff.m_eff);
  const LinkParams link =
      LinkParams::from_snr(std::pow(10.0, 2.46), std::pow(10.0, -13.3), 1e-5,
                           1.0, 2.0, 2.1);
  SimConfig cfg;
  cfg.n_slots = static_cast<std::uint64_t>(state.range(0));
  cfg.n_replications = 1;
  cfg.warmup_slots = 0;
  cfg.seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(eff, buf, link, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateSlots)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
