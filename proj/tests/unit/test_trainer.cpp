#include <doctest.h>

#include "helpers.hpp"
#include "pll/error.hpp"
#include "pll/eval.hpp"
#include "pll/genlab.hpp"
#include "pll/synthetic.hpp"
#include "pll/trainer.hpp"

using namespace pll;

namespace {

struct Split {
  synthetic::Blobs train;
  synthetic::Blobs test;
  MatrixF text;
};

Split blobs(std::size_t k, std::size_t dim, std::size_t per_class, double sep, std::uint64_t seed) {
  synthetic::BlobSpec spec;
  spec.num_classes = k;
  spec.dim = dim;
  spec.per_class = per_class;
  spec.separation = sep;
  spec.seed = seed;
  auto train = synthetic::make_blobs(spec, 1);
  spec.per_class = per_class / 2;
  auto test = synthetic::make_blobs(spec, 2);
  auto text = synthetic::text_embeddings(train.class_means, 1.0, 55 + seed);
  return {std::move(train), std::move(test), std::move(text)};
}

double test_acc(const trainer::FitResult& r, const synthetic::Blobs& test) {
  const auto p = trainer::predict(r.model, test.features, r.logit_adjustment);
  return eval::accuracy(p, test.labels);
}

}  // namespace

TEST_CASE("separable classes reach near-perfect accuracy") {
  const auto s = blobs(2, 16, 200, 8.0, 3);
  const auto ds = PLLDataset::make(s.train.features, testing::singleton_sets(s.train.labels, 2), s.train.labels, 2);
  trainer::TrainConfig cfg;
  const auto r = trainer::fit(ds, cfg);
  CHECK(test_acc(r, s.test) >= 0.99);
  CHECK(r.report.epochs.size() == 10);
  CHECK(r.report.epochs.back().train_accuracy.has_value());
}

TEST_CASE("fit is deterministic") {
  const auto s = blobs(4, 16, 50, 4.0, 1);
  const auto sets = genlab::gen_fps(s.train.labels, 4, 0.5, 2);
  const auto ds = PLLDataset::make(s.train.features, sets, s.train.labels, 4);
  const trainer::EvalSplit test{s.test.features, s.test.labels};
  trainer::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.use_adapter = true;
  cfg.objective = obj::Proden{};
  const auto a = trainer::fit(ds, cfg, {nullptr, &test});
  const auto b = trainer::fit(ds, cfg, {nullptr, &test});
  CHECK(a.report.to_text() == b.report.to_text());
  CHECK(a.model.head.weights == b.model.head.weights);
  CHECK(a.model.adapter->up == b.model.adapter->up);
  cfg.seed = 1;
  CHECK_FALSE(trainer::fit(ds, cfg, {nullptr, &test}).model.head.weights == a.model.head.weights);
}

TEST_CASE("PRODEN on FPS candidates tracks the supervised run") {
  const auto s = blobs(10, 64, 500, 4.0, 1);
  const auto supervised = PLLDataset::make(s.train.features, testing::singleton_sets(s.train.labels, 10), s.train.labels, 10);
  const auto partial = PLLDataset::make(s.train.features, genlab::gen_fps(s.train.labels, 10, 0.5, 7), s.train.labels, 10);
  const trainer::FitOptions opts{&s.text, nullptr};
  trainer::TrainConfig cfg;
  const double sup = test_acc(trainer::fit(supervised, cfg, opts), s.test);
  cfg.objective = obj::Proden{};
  const double pro = test_acc(trainer::fit(partial, cfg, opts), s.test);
  CHECK(pro >= sup - 0.02);
}

TEST_CASE("text initialisation starts ahead of random initialisation") {
  const auto s = blobs(5, 32, 100, 3.0, 2);
  const auto ds = PLLDataset::make(s.train.features, genlab::gen_fps(s.train.labels, 5, 0.5, 1), s.train.labels, 5);
  const trainer::EvalSplit test{s.test.features, s.test.labels};
  trainer::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.lr = 0.003;
  const auto rnd = trainer::fit(ds, cfg, {nullptr, &test});
  const auto txt = trainer::fit(ds, cfg, {&s.text, &test});
  CHECK(*txt.report.epochs[0].test_accuracy >= *rnd.report.epochs[0].test_accuracy);
}

TEST_CASE("every objective trains for an epoch") {
  const auto s = blobs(4, 16, 40, 4.0, 5);
  const auto ds = PLLDataset::make(s.train.features, genlab::gen_fps(s.train.labels, 4, 0.4, 3), s.train.labels, 4);
  const obj::ObjectiveKind kinds[] = {obj::Cc{}, obj::Proden{}, obj::Lws{}, obj::Cavl{}, obj::AbsMae{},
                                      obj::AbsGce{}, obj::CrdFeat{}, obj::Solar{}, obj::Records{},
                                      obj::Records{obj::Lws{}, 0.9, 0.05}, obj::Pop{obj::Proden{}, 0.5},
                                      obj::Pop{obj::Cc{}, 0.02}};
  for (const auto& kind : kinds) {
    INFO(obj::name(kind));
    trainer::TrainConfig cfg;
    cfg.objective = kind;
    cfg.epochs = 2;
    cfg.use_adapter = true;
    const auto r = trainer::fit(ds, cfg, {&s.text, nullptr});
    CHECK(r.report.objective == obj::name(kind));
    CHECK(std::isfinite(r.report.epochs.back().train_loss));
    const bool records = std::holds_alternative<obj::Records>(kind);
    CHECK(r.logit_adjustment.size() == (records ? 4u : 0u));
    if (std::holds_alternative<obj::Pop>(kind)) {
      REQUIRE(r.state.pop_sets);
      CHECK(r.state.pop_sets->is_subset_of(ds.candidates));
    }
  }
}

TEST_CASE("fit rejects bad input") {
  const auto s = blobs(3, 8, 10, 4.0, 0);
  const auto ds = PLLDataset::make(s.train.features, testing::singleton_sets(s.train.labels, 3), s.train.labels, 3);
  const std::vector<std::size_t> none;
  CHECK_THROWS_AS(trainer::fit(ds.select(none), {}), ConfigError);
  trainer::TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(trainer::fit(ds, cfg), ConfigError);
  cfg = {};
  cfg.lr = -1;
  CHECK_THROWS_AS(trainer::fit(ds, cfg), ConfigError);
  const MatrixF wrong(3, 5, 1.0f);
  CHECK_THROWS_AS(trainer::fit(ds, {}, {&wrong, nullptr}), ShapeError);
}
