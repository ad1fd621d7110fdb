#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "qfp/gf2.hpp"

namespace qfp {

enum class PauliKind { I, X, Y, Z };

inline char pauli_char(PauliKind k) {
  switch (k) {
    case PauliKind::I: return 'I';
    case PauliKind::X: return 'X';
    case PauliKind::Y: return 'Y';
    case PauliKind::Z: return 'Z';
  }
  throw std::logic_error("bad PauliKind");
}

// n-qubit Pauli operator modulo phase, in symplectic (x|z) form.
// x bit q and z bit q set -> Y on qubit q.
struct PauliString {
  BitVec x, z;

  PauliString() = default;
  explicit PauliString(std::size_t n) : x(n), z(n) {}

  std::size_t size() const { return x.size(); }

  static PauliString single(std::size_t n, std::size_t q, PauliKind k) {
    PauliString p(n);
    p.set(q, k);
    return p;
  }

  void set(std::size_t q, PauliKind k) {
    x.set(q, k == PauliKind::X || k == PauliKind::Y);
    z.set(q, k == PauliKind::Z || k == PauliKind::Y);
  }

  PauliKind at(std::size_t q) const {
    bool bx = x.get(q), bz = z.get(q);
    if (bx && bz) return PauliKind::Y;
    if (bx) return PauliKind::X;
    if (bz) return PauliKind::Z;
    return PauliKind::I;
  }

  bool identity() const { return !x.any() && !z.any(); }

  std::size_t weight() const {
    std::size_t w = 0;
    for (std::size_t q = 0; q < size(); ++q)
      if (at(q) != PauliKind::I) ++w;
    return w;
  }

  // Product modulo phase.
  friend PauliString operator*(PauliString a, const PauliString& b) {
    a.x ^= b.x;
    a.z ^= b.z;
    return a;
  }

  bool operator==(const PauliString& o) const { return x == o.x && z == o.z; }

  std::string str() const {
    std::string s;
    s.reserve(size());
    for (std::size_t q = 0; q < size(); ++q) s.push_back(pauli_char(at(q)));
    return s;
  }
};

// Symplectic product: false = commute, true = anticommute.
inline bool anticommutes(const PauliString& a, const PauliString& b) {
  return BitVec::dot(a.x, b.z) != BitVec::dot(a.z, b.x);
}

}  // namespace qfp
