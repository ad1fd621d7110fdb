#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qfp/circuit.hpp"
#include "qfp/noise.hpp"
#include "qfp/profile.hpp"
#include "qfp/rng.hpp"
#include "qfp/tableau.hpp"

namespace qfp {

struct ShotOutcome {
  std::vector<std::uint8_t> bits;  // recorded measurement bits, in MEASURE_Z order
  std::vector<std::pair<std::size_t, PauliKind>> faults;  // (physical qubit, fault), in order
};

inline std::string bits_to_string(const std::vector<std::uint8_t>& bits) {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) s[i] = '1';
  return s;
}

// Executes one circuit shot-by-shot against a noise profile. The circuit
// addresses physical qubits; internally the tableau is compacted to the
// qubits actually used, and per-op noise channels are resolved once here
// rather than per shot. Noise comes as a depolarizing draw (gate error)
// followed by a relaxation-twirl draw (T1/T2 over the gate's duration) on
// each target; measurements add a classical readout flip to the recorded
// bit. Idle qubits accrue no noise.
class ShotRunner {
 public:
  ShotRunner(const Circuit& circuit, const NoiseProfile* profile) {
    circuit.validate();
    if (profile) {
      profile->validate();
      if (circuit.n_qubits > profile->graph.n)
        throw std::invalid_argument("ShotRunner: circuit does not fit backend topology");
    }
    const std::vector<std::size_t> used = circuit.used_qubits();
    if (used.empty()) throw std::invalid_argument("ShotRunner: circuit touches no qubits");
    n_local_ = used.size();
    std::vector<std::size_t> local(circuit.n_qubits, static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < used.size(); ++i) local[used[i]] = i;

    for (const auto& op : circuit.ops) {
      CompiledOp cop;
      cop.kind = op.kind;
      cop.a_phys = op.qubits[0];
      cop.a = local[op.qubits[0]];
      if (op.qubits.size() == 2) {
        cop.b_phys = op.qubits[1];
        cop.b = local[op.qubits[1]];
      }
      if (profile) {
        const auto& t = profile->timings;
        const auto relax = [&](std::size_t phys, double dur) {
          const auto& qp = profile->current[phys];
          return relaxation_channel(dur, qp.t1, qp.t2);
        };
        switch (op.kind) {
          case GateKind::H:
          case GateKind::S:
          case GateKind::X:
          case GateKind::Z:
            cop.noise_a = depolarizing_channel(profile->current[cop.a_phys].eps_1q);
            cop.relax_a = relax(cop.a_phys, t.t_1q);
            break;
          case GateKind::CNOT: {
            const double e2 = profile->edge_eps(cop.a_phys, cop.b_phys);
            cop.noise_a = depolarizing_channel(e2);
            cop.noise_b = cop.noise_a;
            cop.relax_a = relax(cop.a_phys, t.t_2q);
            cop.relax_b = relax(cop.b_phys, t.t_2q);
            break;
          }
          case GateKind::MEASURE_Z:
            cop.p01 = profile->current[cop.a_phys].p01;
            cop.p10 = profile->current[cop.a_phys].p10;
            cop.relax_a = relax(cop.a_phys, t.t_meas);
            break;
          case GateKind::RESET:
            cop.relax_a = relax(cop.a_phys, t.t_reset);
            break;
        }
      }
      ops_.push_back(std::move(cop));
    }
  }

  std::size_t n_measurements() const {
    std::size_t m = 0;
    for (const auto& op : ops_)
      if (op.kind == GateKind::MEASURE_Z) ++m;
    return m;
  }

  ShotOutcome run(Rng& rng) const {
    Tableau tab(n_local_);
    ShotOutcome out;
    for (const auto& op : ops_) {
      switch (op.kind) {
        case GateKind::H: tab.h(op.a); break;
        case GateKind::S: tab.s(op.a); break;
        case GateKind::X: tab.x(op.a); break;
        case GateKind::Z: tab.z(op.a); break;
        case GateKind::CNOT: tab.cnot(op.a, op.b); break;
        case GateKind::MEASURE_Z: {
          bool bit = tab.measure_z(op.a, rng);
          apply_channel(tab, op.relax_a, op.a, op.a_phys, rng, out);
          if (op.p01 > 0 || op.p10 > 0) bit = flip_readout(bit, op.p01, op.p10, rng);
          out.bits.push_back(bit ? 1 : 0);
          break;
        }
        case GateKind::RESET:
          tab.reset_z(op.a, rng);
          apply_channel(tab, op.relax_a, op.a, op.a_phys, rng, out);
          break;
      }
      if (op.kind != GateKind::MEASURE_Z && op.kind != GateKind::RESET) {
        apply_channel(tab, op.noise_a, op.a, op.a_phys, rng, out);
        apply_channel(tab, op.relax_a, op.a, op.a_phys, rng, out);
        if (op.kind == GateKind::CNOT) {
          apply_channel(tab, op.noise_b, op.b, op.b_phys, rng, out);
          apply_channel(tab, op.relax_b, op.b, op.b_phys, rng, out);
        }
      }
    }
    return out;
  }

 private:
  struct CompiledOp {
    GateKind kind = GateKind::H;
    std::size_t a = 0, b = 0;            // compacted tableau indices
    std::size_t a_phys = 0, b_phys = 0;  // physical indices, for fault records
    PauliChannel noise_a, noise_b;       // gate-error draw per target
    PauliChannel relax_a, relax_b;       // relaxation draw per target
    double p01 = 0, p10 = 0;
  };

  static void apply_channel(Tableau& tab, const PauliChannel& ch, std::size_t local,
                            std::size_t phys, Rng& rng, ShotOutcome& out) {
    if (ch.trivial()) return;
    const PauliKind k = ch.sample(rng);
    if (k == PauliKind::I) return;
    switch (k) {
      case PauliKind::X: tab.x(local); break;
      case PauliKind::Y: tab.y(local); break;
      case PauliKind::Z: tab.z(local); break;
      case PauliKind::I: break;
    }
    out.faults.emplace_back(phys, k);
  }

  std::size_t n_local_ = 0;
  std::vector<CompiledOp> ops_;
};

inline ShotOutcome run_shot(const Circuit& c, const NoiseProfile& profile, Rng& rng) {
  return ShotRunner(c, &profile).run(rng);
}

inline ShotOutcome run_shot_ideal(const Circuit& c, Rng& rng) {
  return ShotRunner(c, nullptr).run(rng);
}

}  // namespace qfp
