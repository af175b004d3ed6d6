#include "pll/candidates.hpp"

#include <bit>
#include <string>

#include "pll/error.hpp"

namespace pll {

CandidateMatrix::CandidateMatrix(std::size_t n, std::size_t k)
    : n_(n), k_(k), stride_((k + 7) / 8), bits_(n * stride_, 0) {}

CandidateMatrix::CandidateMatrix(std::size_t n, std::size_t k, std::vector<std::uint8_t> packed)
    : n_(n), k_(k), stride_((k + 7) / 8), bits_(std::move(packed)) {
  if (bits_.size() != n_ * stride_) {
    throw ShapeError("packed candidate buffer has " + std::to_string(bits_.size()) +
                     " bytes, expected " + std::to_string(n_ * stride_));
  }
  // Padding bits beyond K must stay clear so equality and counts are well defined.
  if (k_ % 8 != 0) {
    const auto pad_mask = static_cast<std::uint8_t>(0xFFu << (k_ % 8));
    for (std::size_t i = 0; i < n_; ++i) {
      if (bits_[i * stride_ + stride_ - 1] & pad_mask) {
        throw ShapeError("candidate row " + std::to_string(i) + " sets bits beyond K");
      }
    }
  }
}

CandidateMatrix CandidateMatrix::from_rows(std::size_t k,
                                           const std::vector<std::vector<int>>& rows) {
  CandidateMatrix c(rows.size(), k);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j : rows[i]) {
      if (j < 0 || static_cast<std::size_t>(j) >= k) {
        throw ShapeError("class " + std::to_string(j) + " outside [0," + std::to_string(k) + ")");
      }
      c.set(i, static_cast<std::size_t>(j));
    }
  }
  return c;
}

void CandidateMatrix::clear_row(std::size_t i) noexcept {
  std::fill_n(bits_.begin() + static_cast<std::ptrdiff_t>(i * stride_), stride_, 0);
}

std::size_t CandidateMatrix::row_size(std::size_t i) const noexcept {
  std::size_t count = 0;
  for (auto b : packed_row(i)) count += static_cast<std::size_t>(std::popcount(b));
  return count;
}

std::vector<int> CandidateMatrix::members(std::size_t i) const {
  std::vector<int> out;
  for (std::size_t j = 0; j < k_; ++j) {
    if (test(i, j)) out.push_back(static_cast<int>(j));
  }
  return out;
}

CandidateMatrix CandidateMatrix::select_rows(std::span<const std::size_t> idx) const {
  CandidateMatrix out(idx.size(), k_);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = packed_row(idx[r]);
    std::copy(src.begin(), src.end(), out.bits_.begin() + static_cast<std::ptrdiff_t>(r * stride_));
  }
  return out;
}

bool CandidateMatrix::is_subset_of(const CandidateMatrix& other) const {
  if (n_ != other.n_ || k_ != other.k_) return false;
  for (std::size_t b = 0; b < bits_.size(); ++b) {
    if (bits_[b] & ~other.bits_[b]) return false;
  }
  return true;
}

}  // namespace pll
