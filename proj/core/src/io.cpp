#include "pll/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "pll/error.hpp"

namespace pll::io {
namespace {

constexpr std::size_t kHeaderBytes = 12;  // magic + two u32

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFull) throw FormatError(std::string(what) + " exceeds u32 range");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void ByteWriter::magic(const char (&tag)[5]) {
  buf_.insert(buf_.end(), tag, tag + 4);
}

void ByteWriter::u32(std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteReader::require(std::size_t n, const char* context) const {
  if (remaining() < n) {
    throw FormatError(what_ + ": truncated " + context + " (expected " + std::to_string(n) +
                      " bytes, got " + std::to_string(remaining()) + ")");
  }
}

void ByteReader::expect_magic(const char (&tag)[5]) {
  require(4, "header");
  if (std::memcmp(bytes_.data() + pos_, tag, 4) != 0) {
    throw FormatError(what_ + ": bad magic (expected \"" + std::string(tag, 4) + "\")");
  }
  pos_ += 4;
}

std::uint8_t ByteReader::u8() {
  require(1, "field");
  return bytes_[pos_++];
}

std::uint32_t ByteReader::u32() {
  require(4, "header");
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_ + b]) << (8 * b);
  pos_ += 4;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
  auto out = bytes_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::vector<std::uint8_t> encode_matrix(const MatrixF& m) {
  ByteWriter w;
  w.magic("PLLF");
  w.u32(checked_u32(m.rows(), "N"));
  w.u32(checked_u32(m.cols(), "d"));
  for (float v : m.flat()) w.f32(v);
  return w.take();
}

MatrixF decode_matrix(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "PLLF");
  r.require(kHeaderBytes, "header");
  r.expect_magic("PLLF");
  const std::size_t n = r.u32();
  const std::size_t d = r.u32();
  const std::size_t payload = n * d * 4;
  if (r.remaining() != payload) {
    throw FormatError("PLLF: payload size mismatch (expected " + std::to_string(payload) +
                      " bytes, got " + std::to_string(r.remaining()) + ")");
  }
  std::vector<float> data(n * d);
  for (auto& v : data) v = r.f32();
  return MatrixF(n, d, std::move(data));
}

std::vector<std::uint8_t> encode_candidates(const CandidateMatrix& c) {
  ByteWriter w;
  w.magic("PLLC");
  w.u32(checked_u32(c.rows(), "N"));
  w.u32(checked_u32(c.classes(), "K"));
  auto out = w.take();
  const auto packed = c.packed();
  out.insert(out.end(), packed.begin(), packed.end());
  return out;
}

CandidateMatrix decode_candidates(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "PLLC");
  r.require(kHeaderBytes, "header");
  r.expect_magic("PLLC");
  const std::size_t n = r.u32();
  const std::size_t k = r.u32();
  if (k == 0) throw FormatError("PLLC: K must be positive");
  const std::size_t payload = n * ((k + 7) / 8);
  if (r.remaining() != payload) {
    throw FormatError("PLLC: payload size mismatch (expected " + std::to_string(payload) +
                      " bytes, got " + std::to_string(r.remaining()) + ")");
  }
  const auto raw = r.take(payload);
  CandidateMatrix c;
  try {
    c = CandidateMatrix(n, k, std::vector<std::uint8_t>(raw.begin(), raw.end()));
  } catch (const ShapeError& e) {
    throw FormatError(std::string("PLLC: ") + e.what());
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (c.row_size(i) == 0) {
      throw FormatError("PLLC: empty candidate set at row " + std::to_string(i));
    }
  }
  return c;
}

std::vector<std::uint8_t> encode_labels(std::span<const int> labels, std::uint32_t num_classes) {
  ByteWriter w;
  w.magic("PLLY");
  w.u32(checked_u32(labels.size(), "N"));
  w.u32(num_classes);
  for (int y : labels) {
    if (y < 0 || static_cast<std::uint32_t>(y) >= num_classes) {
      throw FormatError("PLLY: label " + std::to_string(y) + " outside [0," +
                        std::to_string(num_classes) + ")");
    }
    w.u32(static_cast<std::uint32_t>(y));
  }
  return w.take();
}

LabelFile decode_labels(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "PLLY");
  r.require(kHeaderBytes, "header");
  r.expect_magic("PLLY");
  LabelFile out;
  const std::size_t n = r.u32();
  out.num_classes = r.u32();
  if (r.remaining() != n * 4) {
    throw FormatError("PLLY: payload size mismatch (expected " + std::to_string(n * 4) +
                      " bytes, got " + std::to_string(r.remaining()) + ")");
  }
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t y = r.u32();
    if (y >= out.num_classes) {
      throw FormatError("PLLY: label " + std::to_string(y) + " at row " + std::to_string(i) +
                        " is not below K=" + std::to_string(out.num_classes));
    }
    out.labels[i] = static_cast<int>(y);
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(std::span<const std::uint8_t> bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

MatrixF read_matrix_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_matrix(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_matrix_file(const MatrixF& m, const std::filesystem::path& path) {
  write_file_bytes(encode_matrix(m), path);
}

CandidateMatrix read_candidates_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_candidates(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_candidates_file(const CandidateMatrix& c, const std::filesystem::path& path) {
  write_file_bytes(encode_candidates(c), path);
}

LabelFile read_labels_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_labels(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_labels_file(std::span<const int> labels, std::uint32_t num_classes,
                       const std::filesystem::path& path) {
  write_file_bytes(encode_labels(labels, num_classes), path);
}

MatrixF read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<float> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      float v = 0.0f;
      try {
        v = std::stof(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size() || cell.empty() || !std::isfinite(v)) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad value '" + cell + "'");
      }
      data.push_back(v);
      ++c;
    }
    if (rows == 0) cols = c;
    if (c != cols || c == 0) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(cols) + " columns, got " + std::to_string(c));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError(path.string() + ": no rows");
  return MatrixF(rows, cols, std::move(data));
}

}  // namespace pll::io
