#pragma once

#include <cmath>
#include <stdexcept>

#include "qfp/pauli.hpp"
#include "qfp/rng.hpp"

namespace qfp {

// Stochastic Pauli channel: apply X/Y/Z with the given probabilities,
// identity otherwise. All Clifford-twirled noise reduces to this form,
// which is what keeps the whole simulation inside the stabilizer formalism.
struct PauliChannel {
  double px = 0.0, py = 0.0, pz = 0.0;

  bool trivial() const { return px == 0.0 && py == 0.0 && pz == 0.0; }

  void validate() const {
    if (px < 0 || py < 0 || pz < 0 || px + py + pz > 1.0 + 1e-12)
      throw std::invalid_argument("PauliChannel: probabilities out of range");
  }

  PauliKind sample(Rng& rng) const {
    if (trivial()) return PauliKind::I;
    const double u = rng.next_double();
    if (u < px) return PauliKind::X;
    if (u < px + py) return PauliKind::Y;
    if (u < px + py + pz) return PauliKind::Z;
    return PauliKind::I;
  }
};

// Pauli twirl of amplitude+phase damping over duration t:
//   pX = pY = (1 - exp(-t/T1)) / 4
//   pZ = (1 - exp(-t/T2)) / 2 - (1 - exp(-t/T1)) / 4
// Requires T2 <= 2*T1, which keeps pZ >= 0.
inline PauliChannel relaxation_channel(double t, double t1, double t2) {
  if (t < 0) throw std::invalid_argument("relaxation_channel: negative duration");
  if (t1 <= 0 || t2 <= 0) throw std::invalid_argument("relaxation_channel: T1, T2 must be > 0");
  if (t2 > 2.0 * t1 + 1e-15 * t1)
    throw std::invalid_argument("relaxation_channel: requires T2 <= 2*T1");
  const double f1 = 1.0 - std::exp(-t / t1);
  const double f2 = 1.0 - std::exp(-t / t2);
  PauliChannel c;
  c.px = f1 / 4.0;
  c.py = f1 / 4.0;
  c.pz = f2 / 2.0 - f1 / 4.0;
  if (c.pz < 0 && c.pz > -1e-15) c.pz = 0.0;
  c.validate();
  return c;
}

// Symmetric depolarizing with total error probability eps: the non-identity
// weight eps*(3/4) splits evenly over X, Y, Z.
inline PauliChannel depolarizing_channel(double eps) {
  if (eps < 0 || eps > 1) throw std::invalid_argument("depolarizing_channel: eps out of [0,1]");
  PauliChannel c;
  c.px = c.py = c.pz = eps / 4.0;
  return c;
}

// Classical readout flip: p01 = P(read 1 | true 0), p10 = P(read 0 | true 1).
inline bool flip_readout(bool bit, double p01, double p10, Rng& rng) {
  const double p = bit ? p10 : p01;
  if (p > 0.0 && rng.bernoulli(p)) return !bit;
  return bit;
}

}  // namespace qfp
