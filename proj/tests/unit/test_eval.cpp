#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pll/error.hpp"
#include "pll/eval.hpp"
#include "pll/genlab.hpp"

using namespace pll;

TEST_CASE("accuracy examples") {
  const std::vector<int> y{0, 1, 2, 3, 0, 1, 2, 3};
  CHECK(eval::accuracy(y, y) == 1.0);
  std::vector<int> shifted(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) shifted[i] = (y[i] + 1) % 4;
  CHECK(eval::accuracy(shifted, y) == 0.0);

  std::vector<int> p(100, 1), l(100, 1);
  p[3] = p[40] = p[77] = 0;
  CHECK(eval::accuracy(p, l) == doctest::Approx(0.97));
  CHECK_THROWS_AS(eval::accuracy(std::vector<int>{1}, l), ShapeError);
}

TEST_CASE("shot buckets") {
  CHECK(eval::shot_of(101) == eval::Shot::Many);
  CHECK(eval::shot_of(100) == eval::Shot::Medium);
  CHECK(eval::shot_of(20) == eval::Shot::Medium);
  CHECK(eval::shot_of(19) == eval::Shot::Few);

  Rng rng(3);
  std::vector<int> y(400), p(400);
  for (std::size_t i = 0; i < 400; ++i) {
    y[i] = static_cast<int>(i % 4);
    p[i] = rng.bernoulli(0.7) ? y[i] : static_cast<int>(rng.below(4));
  }
  const std::vector<std::size_t> uniform(4, 500);
  const auto s = eval::shot_accuracy(p, y, uniform);
  CHECK_FALSE(s.medium);
  CHECK_FALSE(s.few);
  REQUIRE(s.many);
  const auto pc = eval::per_class_accuracy(p, y, 4);
  CHECK(*s.many == doctest::Approx((pc[0] + pc[1] + pc[2] + pc[3]) / 4));

  const auto lt = genlab::longtail_counts(5000, 100.0, 10);
  std::vector<int> y10(100);
  for (std::size_t i = 0; i < 100; ++i) y10[i] = static_cast<int>(i % 10);
  const auto all = eval::shot_accuracy(y10, y10, lt);
  // counts 5000..139 are many, 83 and 50 are medium, nothing is few
  CHECK(all.many == 1.0);
  CHECK(all.medium == 1.0);
  CHECK_FALSE(all.few);
  CHECK(eval::shot_accuracy(y10, y10, genlab::longtail_counts(500, 100.0, 10)).few == 1.0);
}

TEST_CASE("covering rate and oracle accuracy") {
  const auto c = CandidateMatrix::from_rows(4, {{1, 2}, {0, 3}, {2}});
  const std::vector<int> lowest{1, 0, 2};
  CHECK(eval::covering_oracle(lowest, c).covering_rate == 1.0);
  CHECK_FALSE(eval::covering_oracle(lowest, c).oracle_accuracy);

  const auto full = CandidateMatrix::from_rows(3, {{0, 1, 2}, {0, 1, 2}});
  CHECK(eval::covering_oracle(std::vector<int>{2, 0}, full).covering_rate == 1.0);

  Rng rng(8);
  std::vector<int> y(10000), preds(10000);
  for (auto& v : y) v = static_cast<int>(rng.below(10));
  for (auto& v : preds) v = static_cast<int>(rng.below(10));
  const auto r = eval::covering_oracle(preds, testing::singleton_sets(y, 10), &y);
  CHECK(std::abs(r.covering_rate - 0.1) < 0.01);
  REQUIRE(r.oracle_accuracy);
  CHECK(*r.oracle_accuracy == eval::accuracy(preds, y));
}

TEST_CASE("covering rate bounds oracle accuracy when labels are covered") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    const std::size_t k = 2 + rng.below(6);
    auto sets = testing::random_sets(rng, n, k, 0.4);
    std::vector<int> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(k));
      sets.set(i, static_cast<std::size_t>(y[i]));
      p[i] = static_cast<int>(rng.below(k));
    }
    const auto r = eval::covering_oracle(p, sets, &y);
    REQUIRE(r.covering_rate >= *r.oracle_accuracy);
  }
}

TEST_CASE("overall accuracy is the count-weighted mean of per-class accuracy") {
  Rng rng(4);
  std::vector<int> y(333), p(333);
  std::vector<double> counts(7, 0.0);
  for (std::size_t i = 0; i < 333; ++i) {
    y[i] = static_cast<int>(rng.below(6));  // class 6 absent
    p[i] = rng.bernoulli(0.5) ? y[i] : static_cast<int>(rng.below(7));
    counts[y[i]] += 1.0;
  }
  const auto pc = eval::per_class_accuracy(p, y, 7);
  CHECK(std::isnan(pc[6]));
  double weighted = 0.0;
  for (std::size_t c = 0; c < 6; ++c) weighted += counts[c] * pc[c];
  CHECK(std::abs(weighted / 333.0 - eval::accuracy(p, y)) < 1e-9);
}

TEST_CASE("metric block serialisation") {
  const std::vector<int> y{0, 1, 1};
  const std::vector<int> p{0, 1, 0};
  const auto m = eval::evaluate(p, y, 2);
  CHECK(m.overall_acc == doctest::Approx(2.0 / 3));
  const auto text = m.to_text();
  CHECK(text.find("overall_acc=") != std::string::npos);
  CHECK(text.find("few_acc=unavailable") != std::string::npos);
  CHECK(text.find("covering_rate=unavailable") != std::string::npos);
  CHECK(m.per_class_csv().rfind("class,accuracy\n", 0) == 0);

  const std::vector<std::size_t> counts{150, 10};
  const auto sets = CandidateMatrix::from_rows(2, {{0}, {0, 1}, {1}});
  const auto full = eval::evaluate(p, y, 2, counts, &sets);
  CHECK(full.many_acc == 1.0);
  CHECK(full.few_acc == 0.5);
  CHECK_FALSE(full.medium_acc);
  CHECK(full.covering_rate == doctest::Approx(2.0 / 3));
  CHECK(full.oracle_acc == doctest::Approx(2.0 / 3));
}
