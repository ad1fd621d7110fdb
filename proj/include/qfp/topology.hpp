#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfp/circuit.hpp"
#include "qfp/codes.hpp"
#include "qfp/rng.hpp"

namespace qfp {

struct ConnectivityGraph {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // normalized u < v, sorted, unique

  void add_edge(std::size_t u, std::size_t v) {
    if (u == v) throw std::invalid_argument("ConnectivityGraph: self-loop");
    if (u >= n || v >= n) throw std::out_of_range("ConnectivityGraph: vertex out of range");
    if (u > v) std::swap(u, v);
    edges.emplace_back(u, v);
  }

  void normalize() {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }

  bool has_edge(std::size_t u, std::size_t v) const {
    if (u > v) std::swap(u, v);
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(u, v));
  }

  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& [u, v] : edges) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    return adj;
  }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> d(n, 0);
    for (const auto& [u, v] : edges) {
      ++d[u];
      ++d[v];
    }
    return d;
  }

  bool connected() const {
    if (n == 0) return true;
    const auto adj = adjacency();
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack = {0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v : adj[u])
        if (!seen[v]) {
          seen[v] = true;
          ++count;
          stack.push_back(v);
        }
    }
    return count == n;
  }
};

// Heavy-hex lattice: a brick-wall honeycomb of `rows` x `cols` cells whose
// every edge is subdivided by an extra vertex, keeping all degrees <= 3.
// Corner vertices are numbered line-major first, subdivision vertices
// follow in sorted base-edge order.
inline ConnectivityGraph heavy_hex(std::size_t rows, std::size_t cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("heavy_hex: rows, cols must be >= 1");
  const std::size_t width = 2 * cols + 1;
  const std::size_t v0 = (rows + 1) * width;
  const auto corner = [width](std::size_t y, std::size_t x) { return y * width + x; };

  std::vector<std::pair<std::size_t, std::size_t>> base;
  for (std::size_t y = 0; y <= rows; ++y)
    for (std::size_t x = 0; x + 1 < width; ++x)
      base.emplace_back(corner(y, x), corner(y, x + 1));
  for (std::size_t y = 0; y < rows; ++y) {
    const std::size_t parity = (y % 2 == 0) ? 0 : 1;
    for (std::size_t x = parity; x < width; x += 2)
      base.emplace_back(corner(y, x), corner(y + 1, x));
  }
  std::sort(base.begin(), base.end());

  ConnectivityGraph g;
  g.n = v0 + base.size();
  for (std::size_t e = 0; e < base.size(); ++e) {
    const std::size_t mid = v0 + e;
    g.add_edge(base[e].first, mid);
    g.add_edge(mid, base[e].second);
  }
  g.normalize();
  return g;
}

// Interaction graph of a circuit: one vertex per qubit, one edge per
// distinct two-qubit-gate pair.
inline ConnectivityGraph used_subgraph(const Circuit& c) {
  ConnectivityGraph g;
  g.n = c.n_qubits;
  for (const auto& op : c.ops)
    if (is_two_qubit(op.kind)) g.add_edge(op.qubits[0], op.qubits[1]);
  g.normalize();
  return g;
}

// Host lattice shaped exactly like a distance-d surface-code block: data
// and ancilla vertices numbered as build_circuit numbers its qubits, edges
// where syndrome extraction needs a CNOT.
inline ConnectivityGraph surface_lattice(std::size_t distance) {
  LogicalCircuitSpec spec;
  spec.code = {CodeFamily::Surface, distance, 1};
  spec.init = {LogicalInit::Zero};
  spec.rounds = 1;
  return used_subgraph(build_circuit(spec).circuit);
}

// Physical placement of circuit qubit i at host vertex phys[i].
struct Mapping {
  std::string id;
  std::vector<std::size_t> phys;
};

inline void validate_mapping(const Mapping& m, const Circuit& c, const ConnectivityGraph& host) {
  if (m.phys.size() != c.n_qubits)
    throw std::invalid_argument("mapping size must equal circuit qubit count");
  std::set<std::size_t> seen;
  for (std::size_t v : m.phys) {
    if (v >= host.n) throw std::out_of_range("mapping image out of host range");
    if (!seen.insert(v).second) throw std::invalid_argument("mapping is not injective");
  }
  for (const auto& op : c.ops)
    if (is_two_qubit(op.kind) && !host.has_edge(m.phys[op.qubits[0]], m.phys[op.qubits[1]]))
      throw std::invalid_argument("mapping places a two-qubit gate on a missing host edge");
}

// Identity placement; valid only when the host directly contains the
// circuit's interaction graph under identical numbering (e.g. a lattice
// generated from the same code block).
inline Mapping trivial_layout(const Circuit& c, const ConnectivityGraph& host) {
  Mapping m;
  m.id = "trivial";
  m.phys.resize(c.n_qubits);
  for (std::size_t i = 0; i < c.n_qubits; ++i) m.phys[i] = i;
  validate_mapping(m, c, host);
  return m;
}

// Rewrite every op of `c` through the mapping; the result addresses host
// vertices and carries the host's qubit count.
inline Circuit remap(const Circuit& c, const Mapping& m, const ConnectivityGraph& host) {
  validate_mapping(m, c, host);
  Circuit out;
  out.n_qubits = host.n;
  for (const auto& op : c.ops) {
    GateOp o = op;
    for (auto& q : o.qubits) q = m.phys[q];
    out.append(std::move(o));
  }
  return out;
}

// Subgraph-monomorphism search: find up to k injective placements of
// `pattern` into `host` that preserve pattern edges. Backtracking in BFS
// vertex order with degree pruning; branch orders are shuffled under the
// seed, and of everything found within the node budget we prefer
// placements with pairwise-distinct vertex-image sets before padding with
// automorphic variants. Deterministic for a fixed seed.
inline std::vector<Mapping> find_isomorphic_embeddings(const ConnectivityGraph& pattern,
                                                       const ConnectivityGraph& host,
                                                       std::size_t k, std::uint64_t seed,
                                                       std::size_t node_budget = 2000000) {
  if (pattern.n == 0 || k == 0) return {};
  if (pattern.n > host.n) return {};

  Rng rng = Rng(seed).derive(0x656d626564ULL);
  const auto padj = pattern.adjacency();
  const auto hadj = host.adjacency();
  const auto pdeg = pattern.degrees();
  const auto hdeg = host.degrees();

  // BFS order over the pattern so that every vertex after the first has at
  // least one earlier neighbour; works per component.
  std::vector<std::size_t> order;
  std::vector<char> in_order(pattern.n, 0);
  for (std::size_t root = 0; root < pattern.n; ++root) {
    if (in_order[root]) continue;
    std::vector<std::size_t> queue = {root};
    in_order[root] = 1;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::size_t u = queue[qi];
      order.push_back(u);
      for (std::size_t v : padj[u])
        if (!in_order[v]) {
          in_order[v] = 1;
          queue.push_back(v);
        }
    }
  }
  // anchor[i]: position in `order` of one already-placed neighbour of
  // order[i], or the sentinel for component roots.
  constexpr std::size_t kNoAnchor = static_cast<std::size_t>(-1);
  std::vector<std::size_t> pos_in_order(pattern.n);
  for (std::size_t i = 0; i < order.size(); ++i) pos_in_order[order[i]] = i;
  std::vector<std::size_t> anchor(order.size(), kNoAnchor);
  for (std::size_t i = 1; i < order.size(); ++i) {
    for (std::size_t v : padj[order[i]]) {
      if (pos_in_order[v] < i && (anchor[i] == kNoAnchor || pos_in_order[v] < anchor[i]))
        anchor[i] = pos_in_order[v];
    }
  }

  std::vector<Mapping> found;
  std::set<std::vector<std::size_t>> seen_maps;
  std::set<std::set<std::size_t>> seen_images;
  std::size_t distinct_images = 0;
  std::size_t visited = 0;

  std::vector<std::size_t> image(pattern.n, kNoAnchor);
  std::vector<char> used(host.n, 0);

  const std::function<bool(std::size_t)> dfs = [&](std::size_t depth) -> bool {
    if (visited >= node_budget) return true;  // budget exhausted, stop the walk
    if (depth == order.size()) {
      std::vector<std::size_t> m(image);
      if (seen_maps.insert(m).second) {
        std::set<std::size_t> img(m.begin(), m.end());
        if (seen_images.insert(img).second) ++distinct_images;
        Mapping mp;
        mp.phys = std::move(m);
        found.push_back(std::move(mp));
      }
      return distinct_images >= k && found.size() >= k;
    }
    const std::size_t u = order[depth];
    std::vector<std::size_t> cands;
    if (anchor[depth] == kNoAnchor) {
      for (std::size_t h = 0; h < host.n; ++h) cands.push_back(h);
    } else {
      cands = hadj[image[order[anchor[depth]]]];
    }
    rng.shuffle(cands);
    for (std::size_t h : cands) {
      if (used[h] || hdeg[h] < pdeg[u]) continue;
      bool ok = true;
      for (std::size_t v : padj[u]) {
        if (pos_in_order[v] < depth && !host.has_edge(h, image[v])) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      ++visited;
      image[u] = h;
      used[h] = 1;
      const bool stop = dfs(depth + 1);
      image[u] = kNoAnchor;
      used[h] = 0;
      if (stop) return true;
    }
    return false;
  };
  dfs(0);

  // Selection: distinct image sets first, then automorphic duplicates.
  std::vector<Mapping> out;
  std::set<std::set<std::size_t>> taken;
  for (const auto& m : found) {
    if (out.size() >= k) break;
    std::set<std::size_t> img(m.phys.begin(), m.phys.end());
    if (taken.insert(img).second) out.push_back(m);
  }
  for (const auto& m : found) {
    if (out.size() >= k) break;
    if (std::find_if(out.begin(), out.end(), [&](const Mapping& o) { return o.phys == m.phys; }) ==
        out.end())
      out.push_back(m);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = "m" + std::to_string(i);
  return out;
}

inline nlohmann::ordered_json graph_to_json(const ConnectivityGraph& g) {
  nlohmann::ordered_json j;
  j["n"] = g.n;
  auto& e = j["edges"] = nlohmann::ordered_json::array();
  for (const auto& [u, v] : g.edges) e.push_back({u, v});
  return j;
}

inline ConnectivityGraph graph_from_json(const nlohmann::json& j) {
  ConnectivityGraph g;
  g.n = j.at("n").get<std::size_t>();
  for (const auto& je : j.at("edges")) g.add_edge(je.at(0).get<std::size_t>(), je.at(1).get<std::size_t>());
  g.normalize();
  return g;
}

inline nlohmann::ordered_json mapping_to_json(const Mapping& m) {
  return nlohmann::ordered_json{{"id", m.id}, {"phys", m.phys}};
}

inline Mapping mapping_from_json(const nlohmann::json& j) {
  Mapping m;
  m.id = j.at("id").get<std::string>();
  m.phys = j.at("phys").get<std::vector<std::size_t>>();
  return m;
}

}  // namespace qfp
