#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pll/candidates.hpp"
#include "pll/matrix.hpp"

namespace pll::io {

// Binary layouts (all integers and floats little-endian, 32-bit):
//   PLLF  "PLLF" u32 N u32 d   then N*d f32 row-major
//   PLLC  "PLLC" u32 N u32 K   then N rows of ceil(K/8) bytes, LSB-first
//   PLLY  "PLLY" u32 N u32 K   then N u32 labels, each < K

MatrixF read_matrix_file(const std::filesystem::path& path);
void write_matrix_file(const MatrixF& m, const std::filesystem::path& path);

CandidateMatrix read_candidates_file(const std::filesystem::path& path);
void write_candidates_file(const CandidateMatrix& c, const std::filesystem::path& path);

struct LabelFile {
  std::uint32_t num_classes = 0;
  std::vector<int> labels;
};
LabelFile read_labels_file(const std::filesystem::path& path);
void write_labels_file(std::span<const int> labels, std::uint32_t num_classes,
                       const std::filesystem::path& path);

// Hand-authored fixtures: one row per line, comma-separated decimals. Blank
// lines and lines starting with '#' are skipped.
MatrixF read_features_csv(const std::filesystem::path& path);

// In-memory codecs backing the file functions above.
std::vector<std::uint8_t> encode_matrix(const MatrixF& m);
MatrixF decode_matrix(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_candidates(const CandidateMatrix& c);
CandidateMatrix decode_candidates(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_labels(std::span<const int> labels, std::uint32_t num_classes);
LabelFile decode_labels(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(std::span<const std::uint8_t> bytes, const std::filesystem::path& path);

// Little-endian primitive helpers shared with the checkpoint codec.
class ByteWriter {
public:
  void magic(const char (&tag)[5]);
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void f32(float v);
  std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}
  void expect_magic(const char (&tag)[5]);
  std::uint8_t u8();
  std::uint32_t u32();
  float f32();
  // Throws FormatError naming expected/actual byte counts if fewer than n bytes remain.
  void require(std::size_t n, const char* context) const;
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::span<const std::uint8_t> take(std::size_t n);

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

}  // namespace pll::io
