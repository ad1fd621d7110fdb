#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "qfp/pauli.hpp"

namespace qfp {

struct DecodeResult {
  enum class Kind { NoError, SingleFault, Unclassified };
  Kind kind = Kind::NoError;
  std::size_t qubit = 0;
  PauliKind pauli = PauliKind::I;
};

// Lookup decoder over all single-qubit Pauli faults. The table is built by
// pure commutation algebra against the generator list; degenerate faults
// that share a syndrome keep the first entry in (qubit, X<Y<Z) order, and
// syndromes outside the table decode to Unclassified rather than to a
// silent guess.
class SingleErrorDecoder {
 public:
  explicit SingleErrorDecoder(const std::vector<PauliString>& generators) : gens_(generators) {
    if (gens_.empty()) throw std::invalid_argument("SingleErrorDecoder: no generators");
    n_ = gens_[0].size();
    for (std::size_t q = 0; q < n_; ++q) {
      for (PauliKind k : {PauliKind::X, PauliKind::Y, PauliKind::Z}) {
        const std::vector<std::uint8_t> syn = predicted_syndrome(q, k);
        bool nonzero = false;
        for (std::uint8_t b : syn) nonzero |= (b != 0);
        if (!nonzero) continue;  // undetectable fault; zero syndrome means "no error"
        table_.emplace(syn, DecodeResult{DecodeResult::Kind::SingleFault, q, k});
      }
    }
  }

  std::size_t n_qubits() const { return n_; }
  std::size_t n_generators() const { return gens_.size(); }

  // Syndrome a persistent fault (q, k) imprints on one round of
  // measurements: one bit per generator, 1 where they anticommute.
  std::vector<std::uint8_t> predicted_syndrome(std::size_t q, PauliKind k) const {
    if (q >= n_) throw std::out_of_range("predicted_syndrome: qubit out of range");
    const PauliString p = PauliString::single(n_, q, k);
    std::vector<std::uint8_t> syn(gens_.size(), 0);
    for (std::size_t g = 0; g < gens_.size(); ++g) syn[g] = anticommutes(p, gens_[g]) ? 1 : 0;
    return syn;
  }

  DecodeResult decode(const std::vector<std::uint8_t>& syndrome) const {
    if (syndrome.size() != gens_.size())
      throw std::invalid_argument("decode: syndrome width mismatch");
    bool nonzero = false;
    for (std::uint8_t b : syndrome) nonzero |= (b != 0);
    if (!nonzero) return {DecodeResult::Kind::NoError, 0, PauliKind::I};
    const auto it = table_.find(syndrome);
    if (it == table_.end()) return {DecodeResult::Kind::Unclassified, 0, PauliKind::I};
    return it->second;
  }

 private:
  std::vector<PauliString> gens_;
  std::size_t n_ = 0;
  std::map<std::vector<std::uint8_t>, DecodeResult> table_;
};

}  // namespace qfp
