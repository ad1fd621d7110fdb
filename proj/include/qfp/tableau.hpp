#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qfp/gf2.hpp"
#include "qfp/pauli.hpp"
#include "qfp/rng.hpp"

namespace qfp {

// Stabilizer tableau in the Aaronson-Gottesman layout: rows 0..n-1 hold
// destabilizer generators, rows n..2n-1 stabilizer generators, plus one
// scratch row used for deterministic measurements. X and Z parts are
// bit-packed 64 per word; r_ holds the sign bit of each row (1 = minus).
// Memory is O(n^2) bits; every gate is O(n) words, measurement O(n^2).
class Tableau {
 public:
  explicit Tableau(std::size_t n)
      : n_(n),
        words_((n + 63) / 64),
        x_((2 * n + 1) * words_, 0),
        z_((2 * n + 1) * words_, 0),
        r_(2 * n + 1, 0) {
    if (n == 0) throw std::invalid_argument("Tableau: need at least one qubit");
    // |0...0>: destabilizer i = X_i, stabilizer n+i = Z_i.
    for (std::size_t i = 0; i < n_; ++i) {
      xw(i)[i >> 6] |= 1ULL << (i & 63);
      zw(n_ + i)[i >> 6] |= 1ULL << (i & 63);
    }
  }

  std::size_t n() const { return n_; }

  void h(std::size_t q) {
    check(q);
    const std::size_t w = q >> 6;
    const std::uint64_t m = 1ULL << (q & 63);
    for (std::size_t i = 0; i < 2 * n_; ++i) {
      std::uint64_t* xr = xw(i);
      std::uint64_t* zr = zw(i);
      const std::uint64_t xb = xr[w] & m, zb = zr[w] & m;
      if (xb && zb) r_[i] ^= 1;
      xr[w] ^= xb ^ zb;
      zr[w] ^= xb ^ zb;
    }
  }

  void s(std::size_t q) {
    check(q);
    const std::size_t w = q >> 6;
    const std::uint64_t m = 1ULL << (q & 63);
    for (std::size_t i = 0; i < 2 * n_; ++i) {
      const std::uint64_t xb = xw(i)[w] & m, zb = zw(i)[w] & m;
      if (xb && zb) r_[i] ^= 1;
      if (xb) zw(i)[w] ^= m;
    }
  }

  void x(std::size_t q) {
    check(q);
    const std::size_t w = q >> 6;
    const std::uint64_t m = 1ULL << (q & 63);
    for (std::size_t i = 0; i < 2 * n_; ++i)
      if (zw(i)[w] & m) r_[i] ^= 1;
  }

  void z(std::size_t q) {
    check(q);
    const std::size_t w = q >> 6;
    const std::uint64_t m = 1ULL << (q & 63);
    for (std::size_t i = 0; i < 2 * n_; ++i)
      if (xw(i)[w] & m) r_[i] ^= 1;
  }

  void y(std::size_t q) {
    check(q);
    const std::size_t w = q >> 6;
    const std::uint64_t m = 1ULL << (q & 63);
    for (std::size_t i = 0; i < 2 * n_; ++i)
      if ((xw(i)[w] ^ zw(i)[w]) & m) r_[i] ^= 1;
  }

  void cnot(std::size_t c, std::size_t t) {
    check(c);
    check(t);
    if (c == t) throw std::invalid_argument("cnot: control equals target");
    const std::size_t wc = c >> 6, wt = t >> 6;
    const std::uint64_t mc = 1ULL << (c & 63), mt = 1ULL << (t & 63);
    for (std::size_t i = 0; i < 2 * n_; ++i) {
      std::uint64_t* xr = xw(i);
      std::uint64_t* zr = zw(i);
      const bool xc = xr[wc] & mc, zc = zr[wc] & mc;
      const bool xt = xr[wt] & mt, zt = zr[wt] & mt;
      if (xc && zt && (xt == zc)) r_[i] ^= 1;
      if (xc) xr[wt] ^= mt;
      if (zt) zr[wc] ^= mc;
    }
  }

  void apply_pauli(const PauliString& p) {
    if (p.size() != n_) throw std::invalid_argument("apply_pauli: size mismatch");
    for (std::size_t q = 0; q < n_; ++q) {
      switch (p.at(q)) {
        case PauliKind::I: break;
        case PauliKind::X: x(q); break;
        case PauliKind::Y: y(q); break;
        case PauliKind::Z: z(q); break;
      }
    }
  }

  // Measure qubit q in the Z basis; collapses the state. Whether the
  // outcome is random is decided by the tableau, the rng supplies the coin.
  bool measure_z(std::size_t q, Rng& rng) {
    check(q);
    const std::size_t w = q >> 6;
    const std::uint64_t m = 1ULL << (q & 63);

    std::size_t p = 2 * n_;
    for (std::size_t i = n_; i < 2 * n_; ++i) {
      if (xw(i)[w] & m) {
        p = i;
        break;
      }
    }

    if (p < 2 * n_) {
      // Random outcome: some stabilizer anticommutes with Z_q.
      for (std::size_t i = 0; i < 2 * n_; ++i)
        if (i != p && (xw(i)[w] & m)) rowsum(i, p);
      copy_row(p - n_, p);
      zero_row(p);
      zw(p)[w] |= m;
      const bool outcome = rng.next_bit();
      r_[p] = outcome ? 1 : 0;
      return outcome;
    }

    // Deterministic outcome: accumulate into the scratch row.
    const std::size_t scratch = 2 * n_;
    zero_row(scratch);
    r_[scratch] = 0;
    for (std::size_t i = 0; i < n_; ++i)
      if (xw(i)[w] & m) rowsum(scratch, i + n_);
    return r_[scratch] != 0;
  }

  bool is_deterministic_z(std::size_t q) const {
    check(q);
    const std::size_t w = q >> 6;
    const std::uint64_t m = 1ULL << (q & 63);
    for (std::size_t i = n_; i < 2 * n_; ++i)
      if (xw(i)[w] & m) return false;
    return true;
  }

  void reset_z(std::size_t q, Rng& rng) {
    if (measure_z(q, rng)) x(q);
  }

  PauliString stabilizer_row(std::size_t i) const { return row(n_ + i); }
  PauliString destabilizer_row(std::size_t i) const { return row(i); }
  bool row_sign(std::size_t i) const { return r_[i] != 0; }

  // Structural sanity: rows 0..2n-1 symplectically independent, stabilizers
  // mutually commuting, destabilizer i anticommuting exactly with stabilizer i.
  bool check_invariants() const {
    std::vector<BitVec> sym;
    sym.reserve(2 * n_);
    for (std::size_t i = 0; i < 2 * n_; ++i) {
      PauliString p = row(i);
      BitVec v(2 * n_);
      for (std::size_t q = 0; q < n_; ++q) {
        v.set(q, p.x.get(q));
        v.set(n_ + q, p.z.get(q));
      }
      sym.push_back(v);
    }
    if (gf2_rank(sym) != 2 * n_) return false;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (anticommutes(row(n_ + i), row(n_ + j))) return false;
        const bool want = (i == j);
        if (anticommutes(row(i), row(n_ + j)) != want) return false;
      }
    }
    return true;
  }

 private:
  PauliString row(std::size_t i) const {
    PauliString p(n_);
    for (std::size_t q = 0; q < n_; ++q) {
      const std::size_t w = q >> 6;
      const std::uint64_t m = 1ULL << (q & 63);
      p.x.set(q, (x_[i * words_ + w] & m) != 0);
      p.z.set(q, (z_[i * words_ + w] & m) != 0);
    }
    return p;
  }

  std::uint64_t* xw(std::size_t i) { return x_.data() + i * words_; }
  std::uint64_t* zw(std::size_t i) { return z_.data() + i * words_; }
  const std::uint64_t* xw(std::size_t i) const { return x_.data() + i * words_; }
  const std::uint64_t* zw(std::size_t i) const { return z_.data() + i * words_; }

  void zero_row(std::size_t i) {
    for (std::size_t k = 0; k < words_; ++k) {
      xw(i)[k] = 0;
      zw(i)[k] = 0;
    }
    r_[i] = 0;
  }

  void copy_row(std::size_t dst, std::size_t src) {
    for (std::size_t k = 0; k < words_; ++k) {
      xw(dst)[k] = xw(src)[k];
      zw(dst)[k] = zw(src)[k];
    }
    r_[dst] = r_[src];
  }

  // Row h <- row h * row i, tracking the sign exactly (phases stay in
  // {+1,-1} because both rows are Hermitian Paulis that commute here).
  // Word-parallel version of the CHP g-function: per qubit the exponent
  // g(x1,z1,x2,z2) of i is +-1 or 0; we count +1s and -1s with popcounts.
  void rowsum(std::size_t h, std::size_t i) {
    long long cnt = 2LL * r_[h] + 2LL * r_[i];
    std::uint64_t* xh = xw(h);
    std::uint64_t* zh = zw(h);
    const std::uint64_t* xi = xw(i);
    const std::uint64_t* zi = zw(i);
    for (std::size_t k = 0; k < words_; ++k) {
      const std::uint64_t a = xi[k], b = zi[k], c = xh[k], d = zh[k];
      const std::uint64_t y1 = a & b;          // row i has Y here
      const std::uint64_t x1 = a & ~b;         // row i has X
      const std::uint64_t z1 = ~a & b;         // row i has Z
      const std::uint64_t pos = (y1 & ~c & d) | (x1 & c & d) | (z1 & c & ~d);
      const std::uint64_t neg = (y1 & c & ~d) | (x1 & ~c & d) | (z1 & c & d);
      cnt += __builtin_popcountll(pos);
      cnt -= __builtin_popcountll(neg);
      xh[k] ^= a;
      zh[k] ^= b;
    }
    cnt &= 3;  // mod 4; must land on 0 or 2 for commuting Hermitian rows
    r_[h] = (cnt == 2) ? 1 : 0;
  }

  void check(std::size_t q) const {
    if (q >= n_) throw std::out_of_range("Tableau qubit index out of range");
  }

  std::size_t n_;
  std::size_t words_;
  std::vector<std::uint64_t> x_, z_;
  std::vector<std::uint8_t> r_;
};

}  // namespace qfp
