#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pll {

/// N x K boolean membership matrix, bit-packed row-major.
///
/// Each row occupies ceil(K/8) bytes; bit j of a row lives in byte j/8 at
/// position j%8 (LSB first). This is also the on-disk payload layout of the
/// PLLC format, so rows can be written verbatim.
class CandidateMatrix {
public:
  CandidateMatrix() = default;
  CandidateMatrix(std::size_t n, std::size_t k);
  CandidateMatrix(std::size_t n, std::size_t k, std::vector<std::uint8_t> packed);

  static CandidateMatrix from_rows(std::size_t k, const std::vector<std::vector<int>>& rows);

  std::size_t rows() const noexcept { return n_; }
  std::size_t classes() const noexcept { return k_; }
  std::size_t bytes_per_row() const noexcept { return stride_; }

  bool test(std::size_t i, std::size_t j) const noexcept {
    return (bits_[i * stride_ + (j >> 3)] >> (j & 7u)) & 1u;
  }
  void set(std::size_t i, std::size_t j, bool on = true) noexcept {
    auto& byte = bits_[i * stride_ + (j >> 3)];
    const auto mask = static_cast<std::uint8_t>(1u << (j & 7u));
    byte = on ? static_cast<std::uint8_t>(byte | mask) : static_cast<std::uint8_t>(byte & ~mask);
  }
  void clear_row(std::size_t i) noexcept;

  std::size_t row_size(std::size_t i) const noexcept;
  std::vector<int> members(std::size_t i) const;

  std::span<const std::uint8_t> packed_row(std::size_t i) const noexcept {
    return {bits_.data() + i * stride_, stride_};
  }
  std::span<const std::uint8_t> packed() const noexcept { return bits_; }

  // Keeps only the listed rows, in the given order.
  CandidateMatrix select_rows(std::span<const std::size_t> idx) const;

  bool is_subset_of(const CandidateMatrix& other) const;

  friend bool operator==(const CandidateMatrix&, const CandidateMatrix&) = default;

private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace pll
