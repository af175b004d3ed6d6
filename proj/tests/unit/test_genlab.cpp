#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "pll/error.hpp"
#include "pll/genlab.hpp"
#include "pll/synthetic.hpp"

using namespace pll;

namespace {

std::vector<int> cyclic_labels(std::size_t n, std::size_t k) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % k);
  return y;
}

double mean_size(const CandidateMatrix& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i) s += static_cast<double>(c.row_size(i));
  return s / static_cast<double>(c.rows());
}

bool all_covered(const CandidateMatrix& c, const std::vector<int>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!c.test(i, static_cast<std::size_t>(y[i]))) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("rng streams are reproducible and well spread") {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next() == b.next());
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2, 0) != derive_seed(1, 2, 1));
  CHECK(derive_seed(7, 7, 7) == derive_seed(7, 7, 7));

  Rng r(9);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) hist[r.below(7)]++;
  for (int h : hist) CHECK(std::abs(h - 10000) < 500);

  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < 50000; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / 50000) < 0.02);
  CHECK(std::abs(sq / 50000 - 1.0) < 0.03);

  auto p = r.permutation(50);
  std::set<std::size_t> seen(p.begin(), p.end());
  CHECK(seen.size() == 50);
}

TEST_CASE("USS: K=2 rows split evenly between {y} and {0,1}") {
  const auto y = cyclic_labels(10000, 2);
  const auto c = genlab::gen_uss(y, 2, 3);
  CHECK(all_covered(c, y));
  std::size_t full = 0;
  for (std::size_t i = 0; i < c.rows(); ++i) full += c.row_size(i) == 2 ? 1 : 0;
  CHECK(std::abs(static_cast<double>(full) / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("USS: mean size 1 + (K-1)/2 and determinism") {
  const auto y = cyclic_labels(50000, 10);
  const auto c = genlab::gen_uss(y, 10, 4);
  CHECK(std::abs(mean_size(c) - 5.5) < 0.05);
  CHECK(genlab::gen_uss(y, 10, 4) == c);
  CHECK_FALSE(genlab::gen_uss(y, 10, 5) == c);
  CHECK_THROWS_AS(genlab::gen_uss(std::vector<int>{0}, 1, 0), ConfigError);
}

TEST_CASE("FPS: mean sizes at reference settings") {
  const auto y10 = cyclic_labels(50000, 10);
  CHECK(std::abs(mean_size(genlab::gen_fps(y10, 10, 0.7, 1)) - 7.3) < 0.05);
  const auto y100 = cyclic_labels(50000, 100);
  CHECK(std::abs(mean_size(genlab::gen_fps(y100, 100, 0.1, 1)) - 10.9) < 0.1);
  CHECK(std::abs(mean_size(genlab::gen_fps(y100, 100, 0.2, 2)) - 20.8) < 0.2);
}

TEST_CASE("FPS: fallback keeps every row at size >= 2") {
  const auto y = cyclic_labels(20000, 10);
  const auto c = genlab::gen_fps(y, 10, 0.01, 8);
  CHECK(all_covered(c, y));
  for (std::size_t i = 0; i < c.rows(); ++i) REQUIRE(c.row_size(i) >= 2);
}

TEST_CASE("FPS: per-label inclusion frequency is at least eta and close to it") {
  const double eta = 0.3;
  const std::size_t n = 10000;
  const std::vector<int> y(n, 0);
  const auto c = genlab::gen_fps(y, 6, eta, 21);
  const double sd = std::sqrt(eta * (1 - eta) / static_cast<double>(n));
  for (std::size_t j = 1; j < 6; ++j) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += c.test(i, j) ? 1 : 0;
    const double f = static_cast<double>(hits) / static_cast<double>(n);
    // Fallback adds P(no flips)/5 = 0.7^5/5 ~ 0.034 per label on top of eta.
    const double expected = eta + std::pow(1 - eta, 5) / 5.0;
    CHECK(f >= eta - 3 * sd);
    CHECK(std::abs(f - expected) < 4 * sd);
  }
}

TEST_CASE("FPS: eta range") {
  const std::vector<int> y{0, 1};
  CHECK_THROWS_AS(genlab::gen_fps(y, 2, 0.0, 0), ConfigError);
  CHECK_THROWS_AS(genlab::gen_fps(y, 2, 1.0, 0), ConfigError);
  CHECK_THROWS_AS((genlab::GenSpec{genlab::Fps{1.5}, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((genlab::GenSpec{genlab::InstanceDependent{0.0}, 0}.validate()), ConfigError);
}

TEST_CASE("aux classifier fits separable blobs deterministically") {
  synthetic::BlobSpec spec;
  spec.num_classes = 2;
  spec.dim = 8;
  spec.per_class = 200;
  spec.separation = 8.0;
  spec.seed = 2;
  const auto blobs = synthetic::make_blobs(spec, 1);
  const auto a = genlab::train_aux_classifier(blobs.features, blobs.labels, 2, 20, 5);
  const auto b = genlab::train_aux_classifier(blobs.features, blobs.labels, 2, 20, 5);
  CHECK(a.train_accuracy >= 0.99);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);

  const std::vector<int> ones(blobs.labels.size(), 1);
  const auto c = genlab::train_aux_classifier(blobs.features, ones, 2, 5, 5);
  for (std::size_t i = 0; i < blobs.features.rows(); ++i) {
    const auto p = c.probabilities(blobs.features.row(i));
    REQUIRE(p[1] > p[0]);
  }
  CHECK_THROWS_AS(genlab::train_aux_classifier(MatrixF(4, 0), std::vector<int>{0, 1, 0, 1}, 2, 1, 0), ConfigError);
}

TEST_CASE("instance-dependent generation") {
  synthetic::BlobSpec spec;
  spec.num_classes = 100;
  spec.dim = 128;
  spec.per_class = 5;
  spec.separation = 3.0;
  spec.seed = 4;
  const auto blobs = synthetic::make_blobs(spec, 1);
  const auto aux = genlab::train_aux_classifier(blobs.features, blobs.labels, 100, 5, 1);
  const auto c = genlab::gen_instance_dependent(aux, blobs.features, blobs.labels, 100, 0.1);
  CHECK(all_covered(c, blobs.labels));
  for (std::size_t i = 0; i < c.rows(); ++i) {
    REQUIRE(c.row_size(i) >= 10);
    REQUIRE(c.row_size(i) <= 11);
  }
  // Rows are exactly {y} ∪ aux top-10, so classes outside every top-10 of a
  // class never show up in that class's rows.
  for (std::size_t i = 0; i < c.rows(); ++i) {
    const auto p = aux.probabilities(blobs.features.row(i));
    std::vector<int> order(100);
    for (int j = 0; j < 100; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] > p[b]; });
    std::set<int> expect(order.begin(), order.begin() + 10);
    expect.insert(blobs.labels[i]);
    const auto got = c.members(i);
    REQUIRE(std::set<int>(got.begin(), got.end()) == expect);
  }

  CHECK(genlab::instance_top_count(100, 0.1) == 10);
  CHECK(genlab::instance_top_count(10, 0.1) == 1);
  CHECK(genlab::instance_top_count(15, 0.1) == 2);
  CHECK_THROWS_AS(genlab::instance_top_count(5, 0.1), ConfigError);
}

TEST_CASE("generate() dispatches on strategy and is pure") {
  synthetic::BlobSpec spec;
  spec.num_classes = 4;
  spec.dim = 8;
  spec.per_class = 30;
  const auto blobs = synthetic::make_blobs(spec, 1);
  for (const genlab::Strategy s : {genlab::Strategy{genlab::Uss{}}, genlab::Strategy{genlab::Fps{0.4}},
                                   genlab::Strategy{genlab::InstanceDependent{0.5, 3}}}) {
    const genlab::GenSpec g{s, 17};
    const auto a = genlab::generate(g, blobs.features, blobs.labels, 4);
    CHECK(a == genlab::generate(g, blobs.features, blobs.labels, 4));
    CHECK(all_covered(a, blobs.labels));
  }
}

TEST_CASE("long-tail profile follows the floor formula") {
  const auto n = genlab::longtail_counts(5000, 100.0, 10);
  CHECK(n == std::vector<std::size_t>{5000, 2997, 1796, 1077, 645, 387, 232, 139, 83, 50});
  CHECK(genlab::longtail_counts(500, 1.0, 5) == std::vector<std::size_t>(5, 500));

  const auto m = genlab::longtail_counts(500, 100.0, 100);
  for (std::size_t j = 1; j < m.size(); ++j) REQUIRE(m[j] <= m[j - 1]);
  const double ratio = static_cast<double>(m.front()) / static_cast<double>(m.back());
  CHECK(ratio >= 95.0);
  CHECK(ratio <= 100.0);
  CHECK_THROWS_AS(genlab::longtail_counts(500, 0.5, 10), ConfigError);
}

TEST_CASE("subsample_longtail keeps the profile per class") {
  synthetic::BlobSpec spec;
  spec.num_classes = 5;
  spec.dim = 8;
  spec.per_class = 100;
  const auto blobs = synthetic::make_blobs(spec, 1);
  const auto ds = PLLDataset::make(blobs.features, testing::singleton_sets(blobs.labels, 5), blobs.labels, 5);

  const auto lt = genlab::subsample_longtail(ds, 10.0, 3);
  const auto expect = genlab::longtail_counts(100, 10.0, 5);
  CHECK(lt.class_counts == expect);
  CHECK(lt.size() == lt.candidates.rows());
  CHECK(validate_dataset(lt).well_formed());
  CHECK(genlab::subsample_longtail(ds, 10.0, 3).features == lt.features);

  const auto same = genlab::subsample_longtail(ds, 1.0, 3);
  CHECK(same.size() == ds.size());
  CHECK(same.features == ds.features);

  CHECK_THROWS_AS(genlab::subsample_longtail(ds, 1000.0, 3), ConfigError);
}

TEST_CASE("synthetic blobs have equidistant means") {
  synthetic::BlobSpec spec;
  spec.num_classes = 6;
  spec.dim = 12;
  spec.separation = 4.0;
  spec.noise = 1.5;
  const auto means = synthetic::blob_means(spec);
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = a + 1; b < 6; ++b) {
      double d2 = 0.0;
      for (std::size_t t = 0; t < 12; ++t) d2 += std::pow(means(a, t) - means(b, t), 2);
      CHECK(std::sqrt(d2) == doctest::Approx(6.0).epsilon(1e-5));
    }
  }
  const auto text = synthetic::text_embeddings(means, 0.0, 1);
  for (std::size_t c = 0; c < 6; ++c) {
    double dot = 0.0, nm = 0.0;
    for (std::size_t t = 0; t < 12; ++t) {
      dot += text(c, t) * means(c, t);
      nm += means(c, t) * means(c, t);
    }
    CHECK(dot / std::sqrt(nm) == doctest::Approx(1.0).epsilon(1e-5));
  }
}
