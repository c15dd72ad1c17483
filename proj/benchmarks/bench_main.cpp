#include <benchmark/benchmark.h>

#include <cmath>

#include "perco/connectivity.hpp"
#include "perco/estimate.hpp"
#include "perco/events.hpp"
#include "perco/models.hpp"

using namespace perco;

namespace {

Realization rgg(double half, double lambda, std::uint64_t seed) {
  RngStream rng(seed, 0);
  auto pts = sample_ppp(Box::centered(half + 1.0), lambda, rng);
  auto er = rng.substream(2);
  auto r = build_rcm(pts, ConnectionFunction::indicator(1.0), nullptr, 1.0, er);
  r.window = Box::centered(half);
  r.padding = 1.0;
  return r;
}

void BM_SamplePpp(benchmark::State& st) {
  const double half = double(st.range(0));
  std::uint64_t k = 0;
  for (auto _ : st) {
    RngStream rng(1, k++);
    benchmark::DoNotOptimize(sample_ppp(Box::centered(half), 1.0, rng));
  }
  st.SetItemsProcessed(st.iterations() * std::int64_t(4 * half * half));
}
BENCHMARK(BM_SamplePpp)->Arg(20)->Arg(80);

void BM_BuildRcm(benchmark::State& st) {
  const double half = double(st.range(0));
  const auto sampler = st.range(1) ? PairSampler::scan : PairSampler::tree;
  RngStream prng(2, 0);
  const auto pts = sample_ppp(Box::centered(half), 1.0, prng);
  std::uint64_t k = 0;
  for (auto _ : st) {
    RngStream rng(3, k++);
    RcmOptions opt;
    opt.sampler = sampler;
    benchmark::DoNotOptimize(build_rcm(pts, ConnectionFunction::power_min(5.0), nullptr, 10.0, rng, opt));
  }
  st.SetLabel(st.range(1) ? "scan" : "tree");
}
BENCHMARK(BM_BuildRcm)->Args({20, 0})->Args({20, 1})->Args({60, 0})->Unit(benchmark::kMillisecond);

void BM_EnhancedComponents(benchmark::State& st) {
  const auto r = rgg(double(st.range(0)), 1.5, 4);
  for (auto _ : st) benchmark::DoNotOptimize(enhanced_components(r));
  st.counters["edges"] = double(r.edges.size());
}
BENCHMARK(BM_EnhancedComponents)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_DetectCrossing(benchmark::State& st) {
  const double half = double(st.range(0));
  const auto r = rgg(half, 1.5, 5);
  const CrossingSpec spec{Box::centered(half)};
  for (auto _ : st) benchmark::DoNotOptimize(detect_crossing(r, spec, Linkage::enhanced));
}
BENCHMARK(BM_DetectCrossing)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_DetectCircuit(benchmark::State& st) {
  const double half = double(st.range(0));
  const auto r = rgg(half, 1.6, 6);
  const Annulus ann = Annulus::centered({0, 0}, half / 3, half);
  for (auto _ : st) benchmark::DoNotOptimize(detect_circuit(r, ann, Linkage::enhanced));
}
BENCHMARK(BM_DetectCircuit)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

// One trial of the longest-edge tail scan at scale s.
void BM_TailTrial(benchmark::State& st) {
  const double s = double(st.range(0));
  ModelConfig c;
  c.model = ModelKind::ercm;
  c.connection = ConnectionFunction::power_min(5.0);
  c.core = Box::centered(s);
  const LongestEdgeEvent e{c.core, std::pow(s, 0.8)};
  const auto filter = event_filter(e);
  std::uint64_t k = 0;
  for (auto _ : st) {
    const auto r = sample_realization(c, RngStream(7, k++), filter);
    benchmark::DoNotOptimize(event_occurs(r, e, Linkage::enhanced));
  }
}
BENCHMARK(BM_TailTrial)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
