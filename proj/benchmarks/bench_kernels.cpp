#include <benchmark/benchmark.h>

#include <random>

#include "c2pd/capo.hpp"
#include "c2pd/pcgd.hpp"
#include "c2pd/resample.hpp"

namespace {

using namespace c2pd;

template <class Tag>
Grid<Tag> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n * n);
  for (double& x : v) x = d(rng);
  return Grid<Tag>(n, n, std::move(v));
}

void BM_CapoApply(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = noise<DepthTag>(n, 1);
  const auto g = noise<GuidanceTag>(n, 2);
  const CapoParams p = make_capo_params(4, 3);
  const WindowSpec spec{WindowShape::Row1x4, Padding::Replicate};
  for (auto _ : state) benchmark::DoNotOptimize(capo_apply(s, g, p, spec));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n));
}
BENCHMARK(BM_CapoApply)->Arg(48)->Arg(128)->Arg(256);

void BM_CapoBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = noise<DepthTag>(n, 1);
  const auto g = noise<GuidanceTag>(n, 2);
  const auto up = noise<DepthTag>(n, 4);
  const CapoParams p = make_capo_params(4, 3);
  const WindowSpec spec{WindowShape::Row1x4, Padding::Replicate};
  for (auto _ : state) benchmark::DoNotOptimize(capo_backward(s, g, p, spec, up));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n));
}
BENCHMARK(BM_CapoBackward)->Arg(48)->Arg(128);

void BM_PcgdApply(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = noise<DepthTag>(n, 5);
  const auto g = noise<GuidanceTag>(n, 6);
  const CapoParams p = make_capo_params(4, 7);
  const WindowSpec h{WindowShape::Row1x4, Padding::Replicate};
  for (auto _ : state) benchmark::DoNotOptimize(pcgd_apply(d, g, p, h, h.transposed()));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n));
}
BENCHMARK(BM_PcgdApply)->Arg(48)->Arg(128);

void BM_PcgdBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = noise<DepthTag>(n, 5);
  const auto g = noise<GuidanceTag>(n, 6);
  const auto up = noise<DepthTag>(n, 8);
  const CapoParams p = make_capo_params(4, 7);
  const WindowSpec h{WindowShape::Row1x4, Padding::Replicate};
  for (auto _ : state) benchmark::DoNotOptimize(pcgd_backward(d, g, p, h, h.transposed(), up));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n));
}
BENCHMARK(BM_PcgdBackward)->Arg(48);

void BM_BicubicUp(benchmark::State& state) {
  const auto lr = noise<DepthTag>(static_cast<std::size_t>(state.range(0)), 9);
  for (auto _ : state) benchmark::DoNotOptimize(bicubic_up(lr, 4));
}
BENCHMARK(BM_BicubicUp)->Arg(16)->Arg(64)->Arg(128);

}  // namespace
BENCHMARK_MAIN();
