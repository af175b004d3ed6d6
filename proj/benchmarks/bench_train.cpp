#include <benchmark/benchmark.h>

#include "pll/genlab.hpp"
#include "pll/synthetic.hpp"
#include "pll/trainer.hpp"

using namespace pll;

namespace {

void BM_FitEpoch(benchmark::State& state) {
  synthetic::BlobSpec spec;
  spec.num_classes = 10;
  spec.dim = 64;
  spec.per_class = 500;
  const auto blobs = synthetic::make_blobs(spec, 1);
  const auto ds = PLLDataset::make(blobs.features, genlab::gen_fps(blobs.labels, 10, 0.5, 1), blobs.labels, 10);
  trainer::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.use_adapter = state.range(0) != 0;
  cfg.objective = obj::Proden{};
  for (auto _ : state) benchmark::DoNotOptimize(trainer::fit(ds, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.size()));
}

}  // namespace

BENCHMARK(BM_FitEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
