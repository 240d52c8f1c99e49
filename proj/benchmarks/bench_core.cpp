#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "plmf/dwt.hpp"
#include "plmf/leaders.hpp"
#include "plmf/mfdfa.hpp"
#include "plmf/synth.hpp"

namespace {

std::vector<double> noise(std::size_t n) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

void BM_Dwt1d(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)));
  const auto f = plmf::daubechies_filter(2);
  for (auto _ : state) benchmark::DoNotOptimize(plmf::dwt1d(x, f));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Dwt1d)->RangeMultiplier(4)->Range(1 << 12, 1 << 18)->Complexity();

void BM_Dwt2d(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  plmf::Field2d field(side);
  field.values = noise(side * side);
  const auto f = plmf::daubechies_filter(2);
  for (auto _ : state) benchmark::DoNotOptimize(plmf::dwt2d(field, f));
}
BENCHMARK(BM_Dwt2d)->Arg(256)->Arg(1024);

void pleaders_1d(benchmark::State& state, double p) {
  const auto pyr = plmf::dwt1d(noise(static_cast<std::size_t>(state.range(0))), plmf::daubechies_filter(2));
  for (auto _ : state) benchmark::DoNotOptimize(plmf::compute_p_leaders(pyr, p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK_CAPTURE(pleaders_1d, inf, plmf::kInfinity)->RangeMultiplier(4)->Range(1 << 12, 1 << 18)->Complexity();
BENCHMARK_CAPTURE(pleaders_1d, p2, 2.0)->RangeMultiplier(4)->Range(1 << 12, 1 << 18)->Complexity();

void BM_PLeaders2d(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  plmf::Field2d field(side);
  field.values = noise(side * side);
  const auto pyr = plmf::dwt2d(field, plmf::daubechies_filter(2));
  for (auto _ : state) benchmark::DoNotOptimize(plmf::compute_p_leaders(pyr, 2.0));
}
BENCHMARK(BM_PLeaders2d)->Arg(256)->Arg(1024);

void BM_Fluctuations(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise(n);
  const int degree = static_cast<int>(state.range(1));
  const auto scales = plmf::default_mfdfa_scales(n, degree);
  plmf::FluctuationOptions options;
  options.degree = degree;
  for (auto _ : state) benchmark::DoNotOptimize(plmf::fluctuations(x, scales, options));
}
BENCHMARK(BM_Fluctuations)->ArgsProduct({{1 << 14, 1 << 16}, {1, 3}});

void BM_GenMrw(benchmark::State& state) {
  plmf::MrwParams params;
  params.n = static_cast<std::size_t>(state.range(0));
  const auto f = plmf::daubechies_filter(2);
  for (auto _ : state) {
    ++params.seed;
    benchmark::DoNotOptimize(plmf::gen_mrw(params, f));
  }
}
BENCHMARK(BM_GenMrw)->Arg(1 << 14)->Arg(1 << 16);

}  // namespace

BENCHMARK_MAIN();
