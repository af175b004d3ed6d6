#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "helpers.hpp"
#include "pll/dataset.hpp"
#include "pll/error.hpp"
#include "pll/io.hpp"

using namespace pll;

namespace {

std::vector<std::uint8_t> header(const char* magic, std::uint32_t a, std::uint32_t b) {
  io::ByteWriter w;
  w.u8(static_cast<std::uint8_t>(magic[0]));
  w.u8(static_cast<std::uint8_t>(magic[1]));
  w.u8(static_cast<std::uint8_t>(magic[2]));
  w.u8(static_cast<std::uint8_t>(magic[3]));
  w.u32(a);
  w.u32(b);
  return w.take();
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("candidate rows pack LSB-first") {
  const auto c = CandidateMatrix::from_rows(10, {{0, 3, 7, 9}});
  const auto row = c.packed_row(0);
  REQUIRE(row.size() == 2);
  CHECK(row[0] == 0x89);
  CHECK(row[1] == 0x02);

  const auto full = CandidateMatrix::from_rows(8, {{0, 1, 2, 3, 4, 5, 6, 7}});
  REQUIRE(full.packed_row(0).size() == 1);
  CHECK(full.packed_row(0)[0] == 0xFF);

  CHECK(c.row_size(0) == 4);
  CHECK(c.members(0) == std::vector<int>{0, 3, 7, 9});
}

TEST_CASE("pack/unpack round-trips random boolean matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    const std::size_t k = 2 + rng.below(40);
    std::vector<std::vector<bool>> dense(n, std::vector<bool>(k));
    CandidateMatrix c(n, k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        dense[i][j] = rng.bernoulli(0.4);
        c.set(i, j, dense[i][j]);
      }
    }
    const CandidateMatrix back(n, k, std::vector<std::uint8_t>(c.packed().begin(), c.packed().end()));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) REQUIRE(back.test(i, j) == dense[i][j]);
    }
  }
}

TEST_CASE("packed constructor rejects stray padding bits") {
  CHECK_THROWS_AS(CandidateMatrix(1, 10, {0x01, 0x04}), ShapeError);
  CHECK_THROWS_AS(CandidateMatrix(2, 10, {0x01, 0x00}), ShapeError);
}

TEST_CASE("subset and row selection") {
  const auto a = CandidateMatrix::from_rows(5, {{0, 1}, {2}, {3, 4}});
  const auto b = CandidateMatrix::from_rows(5, {{0, 1, 2}, {2}, {0, 3, 4}});
  CHECK(a.is_subset_of(b));
  CHECK_FALSE(b.is_subset_of(a));
  const std::vector<std::size_t> idx{2, 0};
  CHECK(a.select_rows(idx) == CandidateMatrix::from_rows(5, {{3, 4}, {0, 1}}));
}

TEST_CASE("PLLF round-trip and errors") {
  const auto dir = testing::scratch_dir("pllf");
  const MatrixF m{{1, 2, 3}, {4, 5, 6}};
  io::write_matrix_file(m, dir / "m.pllf");
  CHECK(io::read_matrix_file(dir / "m.pllf") == m);

  const auto bytes = io::read_file_bytes(dir / "m.pllf");
  REQUIRE(bytes.size() == 12 + 24);
  CHECK(bytes[0] == 'P');
  CHECK(bytes[3] == 'F');
  CHECK(bytes[4] == 2);   // N, little-endian
  CHECK(bytes[8] == 3);   // d
  CHECK(bytes[12 + 3] == 0x3F);  // 1.0f = 0x3F800000
  CHECK(io::encode_matrix(io::decode_matrix(bytes)) == bytes);

  auto bad = header("PLLF", 10, 4);
  bad.resize(bad.size() + 100);
  const auto msg = error_of([&] { io::decode_matrix(bad); });
  CHECK(msg.find("expected 160") != std::string::npos);
  CHECK(msg.find("got 100") != std::string::npos);

  auto magic = header("XYZQ", 1, 1);
  magic.resize(magic.size() + 4);
  CHECK(error_of([&] { io::decode_matrix(magic); }).find("bad magic") != std::string::npos);

  CHECK(error_of([&] { io::read_matrix_file(dir / "missing.pllf"); }).find("missing.pllf") != std::string::npos);
}

TEST_CASE("PLLC round-trip and errors") {
  const auto dir = testing::scratch_dir("pllc");
  const auto c = CandidateMatrix::from_rows(10, {{0, 3, 7, 9}, {1}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}});
  io::write_candidates_file(c, dir / "c.pllc");
  CHECK(io::read_candidates_file(dir / "c.pllc") == c);
  const auto bytes = io::read_file_bytes(dir / "c.pllc");
  REQUIRE(bytes.size() == 12 + 6);
  CHECK(bytes[12] == 0x89);
  CHECK(bytes[13] == 0x02);

  auto empty_row = header("PLLC", 2, 10);
  for (std::uint8_t b : {0x01, 0x00, 0x00, 0x00}) empty_row.push_back(b);
  CHECK(error_of([&] { io::decode_candidates(empty_row); }).find("empty candidate set at row 1") !=
        std::string::npos);

  auto short_payload = header("PLLC", 3, 10);
  short_payload.push_back(0x01);
  CHECK(error_of([&] { io::decode_candidates(short_payload); }).find("expected 6") != std::string::npos);
}

TEST_CASE("PLLY round-trip and errors") {
  const auto dir = testing::scratch_dir("plly");
  const std::vector<int> labels{0, 9, 5};
  io::write_labels_file(labels, 10, dir / "y.plly");
  const auto back = io::read_labels_file(dir / "y.plly");
  CHECK(back.labels == labels);
  CHECK(back.num_classes == 10);

  auto out_of_range = header("PLLY", 1, 10);
  io::ByteWriter w;
  w.u32(10);
  const auto tail = w.take();
  out_of_range.insert(out_of_range.end(), tail.begin(), tail.end());
  CHECK_THROWS_AS(io::decode_labels(out_of_range), FormatError);

  const std::vector<std::uint8_t> nothing;
  CHECK(error_of([&] { io::decode_labels(nothing); }).find("truncated header") != std::string::npos);
  CHECK_THROWS_AS(io::write_labels_file(std::vector<int>{3}, 3, dir / "z.plly"), FormatError);
}

TEST_CASE("feature CSV reader") {
  const auto dir = testing::scratch_dir("csv");
  {
    std::ofstream out(dir / "f.csv");
    out << "# two rows\n1, 2.5,-3\n\n4,5,6e-1\n";
  }
  const auto m = io::read_features_csv(dir / "f.csv");
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 3);
  CHECK(m(0, 1) == doctest::Approx(2.5));
  CHECK(m(1, 2) == doctest::Approx(0.6));
  {
    std::ofstream out(dir / "ragged.csv");
    out << "1,2\n3\n";
  }
  CHECK_THROWS_AS(io::read_features_csv(dir / "ragged.csv"), FormatError);
}

TEST_CASE("label space validation") {
  CHECK_THROWS_AS((LabelSpace{1, {}}.validate()), ConfigError);
  CHECK_NOTHROW((LabelSpace{2, {}}.validate()));
  CHECK_THROWS_AS((LabelSpace{2, {"cat"}}.validate()), ConfigError);
  CHECK_THROWS_AS((LabelSpace{2, {"cat", "cat"}}.validate()), ConfigError);
  CHECK_THROWS_AS((LabelSpace{2, {"cat", ""}}.validate()), ConfigError);
  CHECK_NOTHROW((LabelSpace{2, {"cat", "dog"}}.validate()));
}

TEST_CASE("confidence matrix rows must lie on the simplex") {
  CHECK_NOTHROW(ConfidenceMatrix(MatrixF{{0.25f, 0.75f}, {1.0f, 0.0f}}));
  CHECK_THROWS_AS(ConfidenceMatrix(MatrixF{{0.5f, 0.6f}}), ConfigError);
  CHECK_THROWS_AS(ConfidenceMatrix(MatrixF{{1.5f, -0.5f}}), ConfigError);
  CHECK_THROWS_AS(ConfidenceMatrix(MatrixF{{std::numeric_limits<float>::quiet_NaN(), 1.0f}}), ConfigError);
}

TEST_CASE("validate_dataset counts violations") {
  MatrixF f(100, 2, 1.0f);
  std::vector<int> y(100);
  for (int i = 0; i < 100; ++i) y[i] = i % 4;
  auto c = testing::singleton_sets(y, 4);
  auto ds = PLLDataset::make(f, c, y, 4);

  auto r = validate_dataset(ds);
  CHECK(r.well_formed());
  CHECK(r.uncovered_count == 0);
  REQUIRE(r.covered_fraction);
  CHECK(*r.covered_fraction == 1.0);
  CHECK(validate_dataset(ds) == r);

  // oracle label outside the set on 3 of 100 rows
  for (std::size_t i : {5u, 50u, 99u}) {
    ds.candidates.clear_row(i);
    ds.candidates.set(i, static_cast<std::size_t>((y[i] + 1) % 4));
  }
  r = validate_dataset(ds);
  CHECK(r.well_formed());
  CHECK(r.uncovered_count == 3);
  CHECK(*r.covered_fraction == doctest::Approx(0.97));

  ds.candidates.clear_row(7);
  ds.features(8, 1) = std::numeric_limits<float>::infinity();
  ds.class_counts[0] += 1;
  r = validate_dataset(ds);
  CHECK_FALSE(r.well_formed());
  CHECK(r.empty_row_count == 1);
  CHECK(r.nonfinite_row_count == 1);
  CHECK(r.class_count_mismatch == 1);

  PLLDataset bad = ds;
  bad.candidates = CandidateMatrix(99, 4);
  CHECK(validate_dataset(bad).shape_mismatch);
}

TEST_CASE("dataset make/select keep counts consistent") {
  MatrixF f{{0, 0}, {1, 1}, {2, 2}};
  const std::vector<int> y{2, 0, 2};
  const auto ds = PLLDataset::make(f, testing::singleton_sets(y, 3), y, 3);
  CHECK(ds.class_counts == std::vector<std::size_t>{1, 0, 2});
  const std::vector<std::size_t> idx{2, 1};
  const auto sub = ds.select(idx);
  CHECK(sub.class_counts == std::vector<std::size_t>{1, 0, 1});
  CHECK(sub.features(0, 0) == 2.0f);
  CHECK(sub.covered(0));
}
