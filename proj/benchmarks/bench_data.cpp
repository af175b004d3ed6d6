#include <benchmark/benchmark.h>

#include "pll/genlab.hpp"
#include "pll/io.hpp"
#include "pll/random.hpp"
#include "pll/zsfilter.hpp"

using namespace pll;

namespace {

std::vector<int> labels(std::size_t n, std::size_t k) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % k);
  return y;
}

void BM_GenUss(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto y = labels(50000, k);
  for (auto _ : state) benchmark::DoNotOptimize(genlab::gen_uss(y, k, 1));
  state.SetItemsProcessed(state.iterations() * 50000);
}

void BM_GenFps(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto y = labels(50000, k);
  for (auto _ : state) benchmark::DoNotOptimize(genlab::gen_fps(y, k, 0.3, 1));
  state.SetItemsProcessed(state.iterations() * 50000);
}

void BM_FilterTopk(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 10000;
  const auto y = labels(n, k);
  const auto c = genlab::gen_fps(y, k, 0.3, 1);
  Rng rng(2);
  MatrixF z(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    float s = 0.0f;
    for (auto& v : z.row(i)) s += (v = static_cast<float>(rng.uniform()));
    for (auto& v : z.row(i)) v /= s;
  }
  const ConfidenceMatrix conf(z);
  for (auto _ : state) benchmark::DoNotOptimize(zsfilter::filter_topk(c, conf, {k / 2}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_CandidateCodec(benchmark::State& state) {
  const auto c = genlab::gen_fps(labels(50000, 100), 100, 0.1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(io::decode_candidates(io::encode_candidates(c)));
}

}  // namespace

BENCHMARK(BM_GenUss)->Arg(10)->Arg(100);
BENCHMARK(BM_GenFps)->Arg(10)->Arg(100);
BENCHMARK(BM_FilterTopk)->Arg(10)->Arg(100);
BENCHMARK(BM_CandidateCodec);
