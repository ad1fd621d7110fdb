#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qfp {

// Dense GF(2) row vector, bit-packed into 64-bit words.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}

  static BitVec from_support(std::size_t n, const std::vector<std::size_t>& support) {
    BitVec v(n);
    for (std::size_t q : support) v.set(q, true);
    return v;
  }

  std::size_t size() const { return n_; }

  bool get(std::size_t i) const {
    check(i);
    return (w_[i >> 6] >> (i & 63)) & 1ULL;
  }
  void set(std::size_t i, bool b) {
    check(i);
    std::uint64_t m = 1ULL << (i & 63);
    if (b)
      w_[i >> 6] |= m;
    else
      w_[i >> 6] &= ~m;
  }
  void flip(std::size_t i) {
    check(i);
    w_[i >> 6] ^= 1ULL << (i & 63);
  }

  BitVec& operator^=(const BitVec& o) {
    if (o.n_ != n_) throw std::invalid_argument("BitVec xor: size mismatch");
    for (std::size_t k = 0; k < w_.size(); ++k) w_[k] ^= o.w_[k];
    return *this;
  }
  friend BitVec operator^(BitVec a, const BitVec& b) { return a ^= b; }

  bool operator==(const BitVec& o) const { return n_ == o.n_ && w_ == o.w_; }
  bool operator!=(const BitVec& o) const { return !(*this == o); }

  bool any() const {
    for (std::uint64_t w : w_)
      if (w) return true;
    return false;
  }

  std::size_t popcount() const {
    std::size_t c = 0;
    for (std::uint64_t w : w_) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  }

  // Parity of the overlap |a & b| mod 2. Popcount parity is linear over
  // GF(2), so xor-accumulating the AND words preserves it.
  static bool dot(const BitVec& a, const BitVec& b) {
    if (a.n_ != b.n_) throw std::invalid_argument("BitVec dot: size mismatch");
    std::uint64_t acc = 0;
    for (std::size_t k = 0; k < a.w_.size(); ++k) acc ^= a.w_[k] & b.w_[k];
    return (__builtin_popcountll(acc) & 1) != 0;
  }

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n_; ++i)
      if (get(i)) s.push_back(i);
    return s;
  }

 private:
  void check(std::size_t i) const {
    if (i >= n_) throw std::out_of_range("BitVec index out of range");
  }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

// In-place reduced row echelon form; returns pivot column per kept row.
// Zero rows are moved to the back and dropped from the pivot list.
inline std::vector<std::size_t> rref(std::vector<BitVec>& rows) {
  std::vector<std::size_t> pivots;
  if (rows.empty()) return pivots;
  const std::size_t n = rows[0].size();
  std::size_t r = 0;
  for (std::size_t c = 0; c < n && r < rows.size(); ++c) {
    std::size_t sel = r;
    while (sel < rows.size() && !rows[sel].get(c)) ++sel;
    if (sel == rows.size()) continue;
    std::swap(rows[r], rows[sel]);
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (i != r && rows[i].get(c)) rows[i] ^= rows[r];
    pivots.push_back(c);
    ++r;
  }
  rows.resize(r);
  return pivots;
}

inline std::size_t gf2_rank(std::vector<BitVec> rows) { return rref(rows).size(); }

// Is `v` in the GF(2) row span of `basis`?
inline bool in_span(const std::vector<BitVec>& basis, const BitVec& v) {
  std::vector<BitVec> rows = basis;
  const std::size_t r0 = rref(rows).size();
  rows.push_back(v);
  return rref(rows).size() == r0;
}

}  // namespace qfp
