#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qfp {

enum class GateKind : std::uint8_t { H, S, X, Z, CNOT, MEASURE_Z, RESET };

inline const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::H: return "H";
    case GateKind::S: return "S";
    case GateKind::X: return "X";
    case GateKind::Z: return "Z";
    case GateKind::CNOT: return "CNOT";
    case GateKind::MEASURE_Z: return "MEASURE_Z";
    case GateKind::RESET: return "RESET";
  }
  throw std::logic_error("bad GateKind");
}

inline GateKind gate_from_name(const std::string& s) {
  if (s == "H") return GateKind::H;
  if (s == "S") return GateKind::S;
  if (s == "X") return GateKind::X;
  if (s == "Z") return GateKind::Z;
  if (s == "CNOT") return GateKind::CNOT;
  if (s == "MEASURE_Z") return GateKind::MEASURE_Z;
  if (s == "RESET") return GateKind::RESET;
  throw std::invalid_argument("unknown gate name: " + s);
}

inline bool is_two_qubit(GateKind k) { return k == GateKind::CNOT; }

// One operation on physical qubit indices. CNOT: qubits = {control, target}.
struct GateOp {
  GateKind kind;
  std::vector<std::size_t> qubits;

  static GateOp h(std::size_t q) { return {GateKind::H, {q}}; }
  static GateOp s(std::size_t q) { return {GateKind::S, {q}}; }
  static GateOp x(std::size_t q) { return {GateKind::X, {q}}; }
  static GateOp z(std::size_t q) { return {GateKind::Z, {q}}; }
  static GateOp cnot(std::size_t c, std::size_t t) { return {GateKind::CNOT, {c, t}}; }
  static GateOp measure_z(std::size_t q) { return {GateKind::MEASURE_Z, {q}}; }
  static GateOp reset(std::size_t q) { return {GateKind::RESET, {q}}; }
};

// Ordered gate list over physical qubit indices; n_qubits bounds the indices.
// n_measurements counts MEASURE_Z ops, i.e. classical bits per shot.
struct Circuit {
  std::size_t n_qubits = 0;
  std::vector<GateOp> ops;

  void append(GateOp op) {
    validate_op(op);
    ops.push_back(std::move(op));
  }

  std::size_t n_measurements() const {
    std::size_t m = 0;
    for (const auto& op : ops)
      if (op.kind == GateKind::MEASURE_Z) ++m;
    return m;
  }

  // Distinct qubits touched by any op, ascending.
  std::vector<std::size_t> used_qubits() const {
    std::vector<bool> seen(n_qubits, false);
    for (const auto& op : ops)
      for (std::size_t q : op.qubits) seen[q] = true;
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < n_qubits; ++q)
      if (seen[q]) out.push_back(q);
    return out;
  }

  void validate_op(const GateOp& op) const {
    const std::size_t arity = is_two_qubit(op.kind) ? 2 : 1;
    if (op.qubits.size() != arity)
      throw std::invalid_argument(std::string("bad arity for ") + gate_name(op.kind));
    for (std::size_t q : op.qubits)
      if (q >= n_qubits) throw std::out_of_range("gate qubit index out of range");
    if (arity == 2 && op.qubits[0] == op.qubits[1])
      throw std::invalid_argument("CNOT control equals target");
  }

  void validate() const {
    for (const auto& op : ops) validate_op(op);
  }
};

inline nlohmann::ordered_json circuit_to_json(const Circuit& c) {
  nlohmann::ordered_json j;
  j["n_qubits"] = c.n_qubits;
  auto& ops = j["ops"] = nlohmann::ordered_json::array();
  for (const auto& op : c.ops) ops.push_back({{"gate", gate_name(op.kind)}, {"qubits", op.qubits}});
  return j;
}

inline Circuit circuit_from_json(const nlohmann::json& j) {
  Circuit c;
  c.n_qubits = j.at("n_qubits").get<std::size_t>();
  for (const auto& jop : j.at("ops")) {
    GateOp op;
    op.kind = gate_from_name(jop.at("gate").get<std::string>());
    op.qubits = jop.at("qubits").get<std::vector<std::size_t>>();
    c.append(std::move(op));
  }
  return c;
}

}  // namespace qfp
