#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qfp/circuit.hpp"
#include "qfp/gf2.hpp"
#include "qfp/pauli.hpp"

namespace qfp {

enum class CodeFamily { Repetition, Shor, Steane, Surface };

inline const char* code_name(CodeFamily f) {
  switch (f) {
    case CodeFamily::Repetition: return "repetition";
    case CodeFamily::Shor: return "shor";
    case CodeFamily::Steane: return "steane";
    case CodeFamily::Surface: return "surface";
  }
  throw std::logic_error("bad CodeFamily");
}

inline CodeFamily code_from_name(const std::string& s) {
  if (s == "repetition") return CodeFamily::Repetition;
  if (s == "shor") return CodeFamily::Shor;
  if (s == "steane") return CodeFamily::Steane;
  if (s == "surface") return CodeFamily::Surface;
  throw std::invalid_argument("unknown code family: " + s);
}

struct CodeSpec {
  CodeFamily family = CodeFamily::Repetition;
  std::size_t distance = 3;        // meaningful for surface; 3 for the fixed codes
  std::size_t logical_qubits = 1;

  void validate() const {
    if (logical_qubits < 1) throw std::invalid_argument("CodeSpec: logical_qubits must be >= 1");
    if (family == CodeFamily::Surface) {
      if (distance < 3 || distance % 2 == 0)
        throw std::invalid_argument("CodeSpec: surface distance must be odd and >= 3");
    } else if (distance != 3) {
      throw std::invalid_argument("CodeSpec: this code family is distance-3 only");
    }
  }
};

// One CSS code block: generator supports over the block's data qubits plus
// one logical operator pair. Logical Z is Z-type and logical X is X-type,
// so transversal Z-basis data readout stays deterministic for |0>/|1>.
struct CssBlock {
  std::size_t n_data = 0;
  std::vector<BitVec> hz, hx;                // Z-type / X-type generator supports
  std::vector<std::string> z_labels, x_labels;
  BitVec logical_x, logical_z;
  bool encode_by_stabilize = false;          // surface: project rather than unitary-encode

  std::size_t n_generators() const { return hz.size() + hx.size(); }
};

namespace detail {

inline BitVec sup(std::size_t n, std::initializer_list<std::size_t> qs) {
  return BitVec::from_support(n, std::vector<std::size_t>(qs));
}

inline CssBlock repetition_block() {
  CssBlock b;
  b.n_data = 3;
  b.hz = {sup(3, {0, 1}), sup(3, {1, 2})};
  b.z_labels = {"Z0", "Z1"};
  b.logical_x = sup(3, {0, 1, 2});
  b.logical_z = sup(3, {0});
  return b;
}

inline CssBlock shor_block() {
  CssBlock b;
  b.n_data = 9;
  b.hz = {sup(9, {0, 1}), sup(9, {1, 2}), sup(9, {3, 4}),
          sup(9, {4, 5}), sup(9, {6, 7}), sup(9, {7, 8})};
  b.hx = {sup(9, {0, 1, 2, 3, 4, 5}), sup(9, {3, 4, 5, 6, 7, 8})};
  b.z_labels = {"Z0", "Z1", "Z2", "Z3", "Z4", "Z5"};
  b.x_labels = {"X0", "X1"};
  b.logical_x = sup(9, {0, 1, 2});
  b.logical_z = sup(9, {0, 3, 6});
  return b;
}

inline CssBlock steane_block() {
  CssBlock b;
  b.n_data = 7;
  // Hamming [7,4,3] checks; identical supports for the X and Z sectors.
  b.hz = {sup(7, {0, 2, 4, 6}), sup(7, {1, 2, 5, 6}), sup(7, {3, 4, 5, 6})};
  b.hx = b.hz;
  b.z_labels = {"Z0", "Z1", "Z2"};
  b.x_labels = {"X0", "X1", "X2"};
  b.logical_x = sup(7, {0, 1, 2});
  b.logical_z = sup(7, {0, 1, 2});
  return b;
}

// Rotated-layout surface code on a d x d data grid. Faces sit between data
// qubits; a face at (fr, fc) covers the grid-clipped 2x2 patch with corners
// (fr, fc) and (fr+1, fc+1). Checkerboard colouring decides X vs Z type;
// boundary faces survive only on the matching sides, which leaves
// (d^2-1)/2 generators of each type and a distance-d logical pair.
inline CssBlock surface_block(std::size_t d) {
  CssBlock b;
  b.encode_by_stabilize = true;
  b.n_data = d * d;
  const auto q = [d](std::size_t r, std::size_t c) { return r * d + c; };
  const long dd = static_cast<long>(d);
  for (long fr = -1; fr < dd; ++fr) {
    for (long fc = -1; fc < dd; ++fc) {
      std::vector<std::size_t> cells;
      for (long r = fr; r <= fr + 1; ++r)
        for (long c = fc; c <= fc + 1; ++c)
          if (r >= 0 && r < dd && c >= 0 && c < dd)
            cells.push_back(q(static_cast<std::size_t>(r), static_cast<std::size_t>(c)));
      if (cells.size() < 2) continue;
      const bool x_type = (((fr + fc) % 2) + 2) % 2 == 0;
      if (cells.size() == 2) {
        const bool horizontal_edge = (fr == -1 || fr == dd - 1);  // top/bottom boundary
        if (horizontal_edge != x_type) continue;                  // keep X on top/bottom, Z on sides
      }
      BitVec v = BitVec::from_support(d * d, cells);
      const std::string tag =
          "(" + std::to_string(fr) + "," + std::to_string(fc) + ")";
      if (x_type) {
        b.x_labels.push_back("X" + tag);
        b.hx.push_back(std::move(v));
      } else {
        b.z_labels.push_back("Z" + tag);
        b.hz.push_back(std::move(v));
      }
    }
  }
  std::vector<std::size_t> col0, row0;
  for (std::size_t i = 0; i < d; ++i) {
    col0.push_back(q(i, 0));
    row0.push_back(q(0, i));
  }
  b.logical_x = BitVec::from_support(d * d, col0);
  b.logical_z = BitVec::from_support(d * d, row0);
  return b;
}

}  // namespace detail

inline CssBlock css_block(const CodeSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case CodeFamily::Repetition: return detail::repetition_block();
    case CodeFamily::Shor: return detail::shor_block();
    case CodeFamily::Steane: return detail::steane_block();
    case CodeFamily::Surface: return detail::surface_block(spec.distance);
  }
  throw std::logic_error("bad CodeFamily");
}

enum class LogicalInit { Zero, One, Plus };

inline char init_char(LogicalInit s) {
  switch (s) {
    case LogicalInit::Zero: return '0';
    case LogicalInit::One: return '1';
    case LogicalInit::Plus: return '+';
  }
  throw std::logic_error("bad LogicalInit");
}

inline LogicalInit init_from_char(char c) {
  if (c == '0') return LogicalInit::Zero;
  if (c == '1') return LogicalInit::One;
  if (c == '+') return LogicalInit::Plus;
  throw std::invalid_argument(std::string("unknown initial state: ") + c);
}

struct LogicalGate {
  enum class Kind { X, CNOT } kind = Kind::X;
  std::size_t a = 0, b = 0;  // logical qubit indices; b used by CNOT only

  static LogicalGate x(std::size_t q) { return {Kind::X, q, 0}; }
  static LogicalGate cnot(std::size_t c, std::size_t t) { return {Kind::CNOT, c, t}; }
};

struct LogicalCircuitSpec {
  CodeSpec code;
  std::vector<LogicalInit> init;     // one entry per logical qubit
  std::vector<LogicalGate> gates;
  std::size_t rounds = 2;            // syndrome rounds after encoding
  bool measure_data = false;         // transversal Z readout of all data qubits

  void validate() const {
    code.validate();
    if (init.size() != code.logical_qubits)
      throw std::invalid_argument("LogicalCircuitSpec: one initial state per logical qubit");
    if (rounds < 1) throw std::invalid_argument("LogicalCircuitSpec: rounds must be >= 1");
    for (const auto& g : gates) {
      if (g.a >= code.logical_qubits ||
          (g.kind == LogicalGate::Kind::CNOT && g.b >= code.logical_qubits))
        throw std::out_of_range("LogicalCircuitSpec: logical gate index out of range");
      if (g.kind == LogicalGate::Kind::CNOT && g.a == g.b)
        throw std::invalid_argument("LogicalCircuitSpec: logical CNOT control equals target");
    }
  }
};

// One measured stabilizer bit. bit_pos indexes into the shot's measurement
// record. frame_mask lists encoding-round bit positions whose XOR is the
// reference value for this bit: the reported syndrome bit is the raw bit
// XOR the frame, which makes encode-by-stabilize blocks read all-zero in
// the noiseless case, exactly like unitarily encoded blocks.
struct SyndromeBit {
  std::size_t round = 0;
  std::size_t generator = 0;
  std::size_t bit_pos = 0;
  std::vector<std::size_t> frame_mask;
};

struct SyndromeLayout {
  std::vector<std::string> generator_labels;
  std::size_t rounds = 0;
  std::vector<SyndromeBit> bits;           // round-major, generator order within a round
  std::vector<std::size_t> data_bit_pos;   // final data readout positions (empty if absent)
  std::size_t record_width = 0;            // MEASURE_Z count per shot

  std::size_t n_generators() const { return generator_labels.size(); }
  std::size_t syndrome_width() const { return bits.size(); }
};

// Fully assembled measurement circuit for a logical-circuit spec, plus the
// structural metadata needed for syndrome extraction, decoding and fault
// injection. Data qubits come first (block-major), then one ancilla per
// generator; generator and logical supports are given over data qubits.
struct CodeCircuit {
  LogicalCircuitSpec spec;
  Circuit circuit;
  SyndromeLayout layout;
  std::size_t n_data = 0;
  std::size_t n_ancilla = 0;
  std::vector<PauliString> generators;       // width n_data
  std::vector<bool> generator_is_x;
  std::vector<PauliString> logical_x, logical_z;  // width n_data, one per logical qubit
  std::vector<std::size_t> round_op_begin;   // size rounds+1; [r] = first op of round r
};

namespace detail {

// Unitary encoder for |0_L> (or |+_L> with the logical X row appended):
// H on the RREF pivots of the X-sector rows, then fan each pivot out over
// the rest of its row. RREF keeps pivot columns clear of the other rows,
// so the fan-outs are disjoint and the prepared state is the uniform
// superposition over the X-sector row span.
inline void emit_css_encoder(Circuit& c, const std::vector<BitVec>& x_rows, std::size_t offset) {
  std::vector<BitVec> rows = x_rows;
  const std::vector<std::size_t> pivots = rref(rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    c.append(GateOp::h(offset + pivots[i]));
    for (std::size_t q : rows[i].support())
      if (q != pivots[i]) c.append(GateOp::cnot(offset + pivots[i], offset + q));
  }
}

}  // namespace detail

// Full-system stabilizer generators (and labels) over the data qubits of
// all blocks, Z-type then X-type within each block, blocks in order.
inline std::pair<std::vector<PauliString>, std::vector<std::string>> stabilizer_generators(
    const CodeSpec& spec) {
  const CssBlock blk = css_block(spec);
  const std::size_t L = spec.logical_qubits;
  const std::size_t n = blk.n_data * L;
  std::vector<PauliString> gens;
  std::vector<std::string> labels;
  for (std::size_t b = 0; b < L; ++b) {
    const std::string prefix = L > 1 ? "b" + std::to_string(b) + "." : "";
    const std::size_t off = b * blk.n_data;
    for (std::size_t i = 0; i < blk.hz.size(); ++i) {
      PauliString p(n);
      for (std::size_t q : blk.hz[i].support()) p.set(off + q, PauliKind::Z);
      gens.push_back(std::move(p));
      labels.push_back(prefix + blk.z_labels[i]);
    }
    for (std::size_t i = 0; i < blk.hx.size(); ++i) {
      PauliString p(n);
      for (std::size_t q : blk.hx[i].support()) p.set(off + q, PauliKind::X);
      gens.push_back(std::move(p));
      labels.push_back(prefix + blk.x_labels[i]);
    }
  }
  return {std::move(gens), std::move(labels)};
}

// Build the physical measurement circuit: encode every block, apply logical
// gates (transversal), run `rounds` rounds of ancilla-based syndrome
// extraction with ancilla reset, optionally measure all data qubits.
inline CodeCircuit build_circuit(const LogicalCircuitSpec& spec) {
  spec.validate();
  const CssBlock blk = css_block(spec.code);
  const std::size_t L = spec.code.logical_qubits;
  const std::size_t nd = blk.n_data * L;
  const std::size_t gens_per_block = blk.n_generators();
  const std::size_t ng = gens_per_block * L;

  CodeCircuit cc;
  cc.spec = spec;
  cc.n_data = nd;
  cc.n_ancilla = ng;
  cc.circuit.n_qubits = nd + ng;

  auto [gens, labels] = stabilizer_generators(spec.code);
  cc.generators = std::move(gens);
  cc.layout.generator_labels = std::move(labels);
  for (std::size_t b = 0; b < L; ++b) {
    for (std::size_t i = 0; i < blk.hz.size(); ++i) cc.generator_is_x.push_back(false);
    for (std::size_t i = 0; i < blk.hx.size(); ++i) cc.generator_is_x.push_back(true);
  }
  for (std::size_t b = 0; b < L; ++b) {
    const std::size_t off = b * blk.n_data;
    PauliString lx(nd), lz(nd);
    for (std::size_t q : blk.logical_x.support()) lx.set(off + q, PauliKind::X);
    for (std::size_t q : blk.logical_z.support()) lz.set(off + q, PauliKind::Z);
    cc.logical_x.push_back(std::move(lx));
    cc.logical_z.push_back(std::move(lz));
  }

  Circuit& c = cc.circuit;
  std::size_t next_bit = 0;

  // Ancilla-assisted measurement of generator g; returns the bit position.
  const auto extract = [&](std::size_t g) {
    const std::size_t anc = nd + g;
    const auto support = cc.generator_is_x[g] ? cc.generators[g].x.support()
                                              : cc.generators[g].z.support();
    if (cc.generator_is_x[g]) {
      c.append(GateOp::h(anc));
      for (std::size_t q : support) c.append(GateOp::cnot(anc, q));
      c.append(GateOp::h(anc));
    } else {
      for (std::size_t q : support) c.append(GateOp::cnot(q, anc));
    }
    c.append(GateOp::measure_z(anc));
    c.append(GateOp::reset(anc));
    return next_bit++;
  };

  // Encoding. Unitary blocks get the explicit CSS encoder; surface blocks
  // get one projective round whose bits become the syndrome reference frame.
  std::vector<std::size_t> frame_bit(ng, 0);
  std::vector<std::vector<std::size_t>> frame_mask(ng);
  if (blk.encode_by_stabilize) {
    for (std::size_t b = 0; b < L; ++b)
      if (spec.init[b] == LogicalInit::Plus)
        for (std::size_t q = 0; q < blk.n_data; ++q) c.append(GateOp::h(b * blk.n_data + q));
    for (std::size_t g = 0; g < ng; ++g) frame_bit[g] = extract(g);
    for (std::size_t g = 0; g < ng; ++g) frame_mask[g] = {frame_bit[g]};
    for (std::size_t b = 0; b < L; ++b)
      if (spec.init[b] == LogicalInit::One)
        for (std::size_t q : cc.logical_x[b].x.support()) c.append(GateOp::x(q));
  } else {
    for (std::size_t b = 0; b < L; ++b) {
      const std::size_t off = b * blk.n_data;
      std::vector<BitVec> x_rows = blk.hx;
      if (spec.init[b] == LogicalInit::Plus) x_rows.push_back(blk.logical_x);
      detail::emit_css_encoder(c, x_rows, off);
      if (spec.init[b] == LogicalInit::One)
        for (std::size_t q : blk.logical_x.support()) c.append(GateOp::x(off + q));
    }
  }

  // Logical gates, all transversal; the frame masks track how conjugation
  // rewrites one generator's reference into a product of encoding bits.
  for (const auto& g : spec.gates) {
    if (g.kind == LogicalGate::Kind::X) {
      for (std::size_t q : cc.logical_x[g.a].x.support()) c.append(GateOp::x(q));
    } else {
      const std::size_t ca = g.a * blk.n_data, cb = g.b * blk.n_data;
      for (std::size_t q = 0; q < blk.n_data; ++q) c.append(GateOp::cnot(ca + q, cb + q));
      if (blk.encode_by_stabilize) {
        // CNOT(a->b) pulls Z-generators of b back through a and X-generators
        // of a forward through b: Zb -> Za*Zb and Xa -> Xa*Xb.
        const std::size_t za = g.a * gens_per_block, zb = g.b * gens_per_block;
        for (std::size_t i = 0; i < blk.hz.size(); ++i) {
          auto& mb = frame_mask[zb + i];
          const auto& ma = frame_mask[za + i];
          mb.insert(mb.end(), ma.begin(), ma.end());
        }
        const std::size_t xa = g.a * gens_per_block + blk.hz.size();
        const std::size_t xb = g.b * gens_per_block + blk.hz.size();
        for (std::size_t i = 0; i < blk.hx.size(); ++i) {
          auto& ma = frame_mask[xa + i];
          const auto& mbv = frame_mask[xb + i];
          ma.insert(ma.end(), mbv.begin(), mbv.end());
        }
      }
    }
  }

  // Masks are XOR-sets: positions appearing an even number of times cancel.
  for (auto& m : frame_mask) {
    std::sort(m.begin(), m.end());
    std::vector<std::size_t> reduced;
    for (std::size_t i = 0; i < m.size();) {
      std::size_t j = i;
      while (j < m.size() && m[j] == m[i]) ++j;
      if ((j - i) % 2 == 1) reduced.push_back(m[i]);
      i = j;
    }
    m = std::move(reduced);
  }

  // Syndrome rounds.
  cc.layout.rounds = spec.rounds;
  for (std::size_t r = 0; r < spec.rounds; ++r) {
    cc.round_op_begin.push_back(c.ops.size());
    for (std::size_t g = 0; g < ng; ++g) {
      SyndromeBit bit;
      bit.round = r;
      bit.generator = g;
      bit.bit_pos = extract(g);
      bit.frame_mask = frame_mask[g];
      cc.layout.bits.push_back(std::move(bit));
    }
  }
  cc.round_op_begin.push_back(c.ops.size());

  if (spec.measure_data) {
    for (std::size_t q = 0; q < nd; ++q) {
      c.append(GateOp::measure_z(q));
      cc.layout.data_bit_pos.push_back(next_bit++);
    }
  }
  cc.layout.record_width = next_bit;
  return cc;
}

// Copy of the measurement circuit with a persistent Pauli fault planted on
// one data qubit just before syndrome round `round` begins. Y is injected
// as X then Z, the same operator up to global phase.
inline Circuit with_injected_fault(const CodeCircuit& cc, std::size_t round,
                                   std::size_t data_qubit, PauliKind k) {
  if (round >= cc.layout.rounds)
    throw std::out_of_range("with_injected_fault: round out of range");
  if (data_qubit >= cc.n_data)
    throw std::out_of_range("with_injected_fault: data qubit out of range");
  if (k == PauliKind::I) throw std::invalid_argument("with_injected_fault: fault must act");
  Circuit out;
  out.n_qubits = cc.circuit.n_qubits;
  const std::size_t at = cc.round_op_begin[round];
  for (std::size_t i = 0; i < cc.circuit.ops.size(); ++i) {
    if (i == at) {
      if (k == PauliKind::X || k == PauliKind::Y) out.append(GateOp::x(data_qubit));
      if (k == PauliKind::Z || k == PauliKind::Y) out.append(GateOp::z(data_qubit));
    }
    out.append(cc.circuit.ops[i]);
  }
  return out;
}

// Frame-referenced syndrome: bit (r, g) = raw bit XOR its encoding frame.
inline std::vector<std::uint8_t> extract_syndrome(const SyndromeLayout& layout,
                                                  const std::vector<std::uint8_t>& record) {
  if (record.size() != layout.record_width)
    throw std::invalid_argument("extract_syndrome: record width mismatch");
  std::vector<std::uint8_t> out;
  out.reserve(layout.bits.size());
  for (const auto& b : layout.bits) {
    std::uint8_t v = record[b.bit_pos];
    for (std::size_t f : b.frame_mask) v ^= record[f];
    out.push_back(v);
  }
  return out;
}

// XOR parity of the final data readout over logical Z's support; the
// logical measurement result for |0>/|1> preparations.
inline std::uint8_t logical_z_readout(const CodeCircuit& cc, std::size_t logical,
                                      const std::vector<std::uint8_t>& record) {
  if (cc.layout.data_bit_pos.empty())
    throw std::logic_error("logical_z_readout: circuit has no data measurement");
  if (logical >= cc.logical_z.size())
    throw std::out_of_range("logical_z_readout: logical index out of range");
  std::uint8_t v = 0;
  for (std::size_t q : cc.logical_z[logical].z.support())
    v ^= record[cc.layout.data_bit_pos[q]];
  return v;
}

inline nlohmann::ordered_json layout_to_json(const SyndromeLayout& l) {
  nlohmann::ordered_json j;
  j["generator_labels"] = l.generator_labels;
  j["rounds"] = l.rounds;
  auto& bits = j["bits"] = nlohmann::ordered_json::array();
  for (const auto& b : l.bits)
    bits.push_back({{"round", b.round},
                    {"generator", b.generator},
                    {"bit_pos", b.bit_pos},
                    {"frame_mask", b.frame_mask}});
  j["data_bit_pos"] = l.data_bit_pos;
  j["record_width"] = l.record_width;
  return j;
}

inline SyndromeLayout layout_from_json(const nlohmann::json& j) {
  SyndromeLayout l;
  l.generator_labels = j.at("generator_labels").get<std::vector<std::string>>();
  l.rounds = j.at("rounds").get<std::size_t>();
  for (const auto& jb : j.at("bits")) {
    SyndromeBit b;
    b.round = jb.at("round").get<std::size_t>();
    b.generator = jb.at("generator").get<std::size_t>();
    b.bit_pos = jb.at("bit_pos").get<std::size_t>();
    b.frame_mask = jb.at("frame_mask").get<std::vector<std::size_t>>();
    l.bits.push_back(std::move(b));
  }
  l.data_bit_pos = j.at("data_bit_pos").get<std::vector<std::size_t>>();
  l.record_width = j.at("record_width").get<std::size_t>();
  return l;
}

}  // namespace qfp
