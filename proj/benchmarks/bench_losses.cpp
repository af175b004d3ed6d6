#include <benchmark/benchmark.h>

#include "pll/objectives.hpp"
#include "pll/random.hpp"

using namespace pll;

namespace {

MatrixD logits(std::size_t b, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  MatrixD z(b, k);
  for (auto& v : z.flat()) v = 2.0 * rng.normal();
  return z;
}

CandidateMatrix sets(std::size_t b, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  CandidateMatrix c(b, k);
  for (std::size_t i = 0; i < b; ++i) {
    c.set(i, rng.below(k));
    for (std::size_t j = 0; j < k; ++j) {
      if (rng.bernoulli(0.3)) c.set(i, j);
    }
  }
  return c;
}

template <class F>
void run_loss(benchmark::State& state, F&& loss) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto z = logits(b, k, 1);
  const auto s = sets(b, k, 2);
  for (auto _ : state) benchmark::DoNotOptimize(loss(z, s));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b));
}

void BM_LossCc(benchmark::State& state) {
  run_loss(state, [](const MatrixD& z, const CandidateMatrix& s) { return obj::loss_cc(z, s); });
}
void BM_LossLws(benchmark::State& state) {
  run_loss(state, [](const MatrixD& z, const CandidateMatrix& s) {
    return obj::loss_lws(z, s, 1.0, obj::lws_weights(obj::softmax_rows(z), s));
  });
}
void BM_LossCavl(benchmark::State& state) {
  run_loss(state, [](const MatrixD& z, const CandidateMatrix& s) { return obj::loss_cavl(z, s); });
}
void BM_LossAbsGce(benchmark::State& state) {
  run_loss(state, [](const MatrixD& z, const CandidateMatrix& s) {
    return obj::loss_abs(z, s, {obj::AbsKind::Base::Gce, 0.7});
  });
}
void BM_LossCrd(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto za = logits(b, k, 1);
  const auto zb = logits(b, k, 3);
  const auto s = sets(b, k, 2);
  for (auto _ : state) benchmark::DoNotOptimize(obj::loss_crd(za, zb, s, 1.0));
}

void BM_Sinkhorn(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto p = obj::softmax_rows(logits(b, k, 1));
  const auto s = sets(b, k, 2);
  const std::vector<double> r(k, 1.0 / static_cast<double>(k));
  for (auto _ : state) benchmark::DoNotOptimize(obj::sinkhorn_assign(p, s, r, 0.05, 100));
}

}  // namespace

BENCHMARK(BM_LossCc)->Args({64, 10})->Args({64, 100})->Args({64, 1000});
BENCHMARK(BM_LossLws)->Args({64, 10})->Args({64, 100});
BENCHMARK(BM_LossCavl)->Args({64, 10})->Args({64, 100});
BENCHMARK(BM_LossAbsGce)->Args({64, 10})->Args({64, 100});
BENCHMARK(BM_LossCrd)->Args({64, 10})->Args({64, 100});
BENCHMARK(BM_Sinkhorn)->Args({8, 5})->Args({64, 10})->Args({64, 100});
