#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfp/rng.hpp"
#include "qfp/topology.hpp"

namespace qfp {

// ERaD carries only relaxation noise (T1/T2 over gate durations); full
// emulation adds depolarizing gate error and classical readout flips.
enum class NoiseTier { ERaD, FullEmulation };

inline const char* tier_name(NoiseTier t) {
  return t == NoiseTier::ERaD ? "erad" : "full_emulation";
}

inline NoiseTier tier_from_name(const std::string& s) {
  if (s == "erad") return NoiseTier::ERaD;
  if (s == "full_emulation") return NoiseTier::FullEmulation;
  throw std::invalid_argument("unknown noise tier: " + s);
}

struct GateTimings {
  double t_1q = 35e-9;
  double t_2q = 300e-9;
  double t_meas = 0.0;
  double t_reset = 0.0;
};

struct QubitParams {
  double t1 = 0, t2 = 0;      // relaxation times, seconds
  double eps_1q = 0;          // one-qubit depolarizing error probability
  double p01 = 0, p10 = 0;    // readout flip probabilities
};

// Log-uniform sampling bounds for fleet generation; T2 is additionally
// capped at 2*T1 so the Pauli twirl stays a valid channel. Sampling is
// hierarchical: each backend gets one device-level center per parameter
// family and its qubits scatter log-uniformly within a band of
// device_band times the family's log-range around that center, so whole
// devices differ the way real fleets do. Centers are placed by a Latin
// hypercube over the families: backend b sits in a permuted stratum of
// each center range, which keeps every pair of devices apart in every
// family instead of letting two of them collide by chance.
struct FleetRanges {
  double t1_lo = 20e-6, t1_hi = 400e-6;
  double t2_lo = 10e-6, t2_hi = 400e-6;
  double eps1_lo = 1e-5, eps1_hi = 3e-3;
  double eps2_lo = 1e-4, eps2_hi = 5e-2;
  double ro_lo = 5e-4, ro_hi = 8e-2;
  double device_band = 0.15;  // within-device half-width, fraction of log-range
};

// Calibration jitter: each epoch resamples current values multiplicatively
// around base, current = base * exp(sigma * z), anchored (not a walk).
struct DriftSigmas {
  double gate = 0.15;
  double relax = 0.05;
  double readout = 0.10;
};

struct NoiseProfile {
  std::string backend_id;
  std::size_t backend_index = 0;
  NoiseTier tier = NoiseTier::FullEmulation;
  std::uint64_t fleet_seed = 0;
  ConnectivityGraph graph;
  GateTimings timings;
  std::vector<QubitParams> base, current;          // per qubit
  std::vector<double> eps_2q_base, eps_2q;         // per graph edge, same order
  std::size_t epoch = 0;

  std::size_t edge_index(std::size_t u, std::size_t v) const {
    if (u > v) std::swap(u, v);
    const auto it = std::lower_bound(graph.edges.begin(), graph.edges.end(), std::make_pair(u, v));
    if (it == graph.edges.end() || *it != std::make_pair(u, v))
      throw std::invalid_argument("edge_index: no such edge in backend topology");
    return static_cast<std::size_t>(it - graph.edges.begin());
  }

  double edge_eps(std::size_t u, std::size_t v) const { return eps_2q[edge_index(u, v)]; }

  void validate() const {
    if (base.size() != graph.n || current.size() != graph.n)
      throw std::invalid_argument("NoiseProfile: qubit parameter count mismatch");
    if (eps_2q_base.size() != graph.edges.size() || eps_2q.size() != graph.edges.size())
      throw std::invalid_argument("NoiseProfile: edge parameter count mismatch");
    const auto check_q = [this](const QubitParams& p) {
      if (p.t1 <= 0 || p.t2 <= 0) throw std::invalid_argument("NoiseProfile: T1, T2 must be > 0");
      if (p.t2 > 2.0 * p.t1 * (1 + 1e-12))
        throw std::invalid_argument("NoiseProfile: requires T2 <= 2*T1");
      if (p.eps_1q < 0 || p.eps_1q > 1 || p.p01 < 0 || p.p01 > 1 || p.p10 < 0 || p.p10 > 1)
        throw std::invalid_argument("NoiseProfile: probabilities out of [0,1]");
      if (tier == NoiseTier::ERaD && (p.eps_1q != 0 || p.p01 != 0 || p.p10 != 0))
        throw std::invalid_argument("NoiseProfile: ERaD tier must have zero gate/readout error");
    };
    for (const auto& p : base) check_q(p);
    for (const auto& p : current) check_q(p);
    for (double e : eps_2q_base)
      if (e < 0 || e > 1) throw std::invalid_argument("NoiseProfile: edge eps out of [0,1]");
    for (double e : eps_2q)
      if (e < 0 || e > 1) throw std::invalid_argument("NoiseProfile: edge eps out of [0,1]");
    if (tier == NoiseTier::ERaD)
      for (double e : eps_2q)
        if (e != 0) throw std::invalid_argument("NoiseProfile: ERaD tier must have zero CNOT error");
  }
};

namespace detail {
constexpr std::uint64_t kFleetStream = 0xf1ee7ULL;
constexpr std::uint64_t kCalibStream = 0xca11bULL;
}  // namespace detail

// Draw one fleet of backends over a shared topology. All raw parameters
// are drawn in a fixed order regardless of tier, so ERaD and full-emulation
// fleets with the same seed share identical T1/T2 spreads; the ERaD tier
// then zeroes the gate and readout errors.
inline std::vector<NoiseProfile> generate_fleet(std::size_t n_backends,
                                                const ConnectivityGraph& graph, NoiseTier tier,
                                                std::uint64_t seed,
                                                const FleetRanges& ranges = {},
                                                const GateTimings& timings = {}) {
  if (n_backends < 2) throw std::invalid_argument("generate_fleet: need at least 2 backends");
  if (graph.n == 0) throw std::invalid_argument("generate_fleet: empty topology");
  if (ranges.t2_hi > 2.0 * ranges.t1_hi)
    throw std::invalid_argument("generate_fleet: T2 range exceeds 2*T1 upper bound");
  if (ranges.device_band < 0 || ranges.device_band > 0.5)
    throw std::invalid_argument("generate_fleet: device_band must be in [0, 0.5]");

  // device center in the log-interior, qubits within +-band around it
  struct Family {
    double c_lo, c_hi, band;
    Family(double lo, double hi, double frac) {
      const double w = frac * std::log(hi / lo);
      band = std::exp(w);
      c_lo = lo * band;
      c_hi = hi / band;
    }
    // stratum s of n, jittered into its middle half by u in [0,1)
    double center(std::size_t s, std::size_t n, double u) const {
      const double pos = (static_cast<double>(s) + 0.25 + 0.5 * u) / static_cast<double>(n);
      return c_lo * std::pow(c_hi / c_lo, pos);
    }
    double draw(Rng& rng, double c) const { return rng.log_uniform(c / band, c * band); }
  };
  const Family families[5] = {Family(ranges.t1_lo, ranges.t1_hi, ranges.device_band),
                              Family(ranges.t2_lo, ranges.t2_hi, ranges.device_band),
                              Family(ranges.eps1_lo, ranges.eps1_hi, ranges.device_band),
                              Family(ranges.ro_lo, ranges.ro_hi, ranges.device_band),
                              Family(ranges.eps2_lo, ranges.eps2_hi, ranges.device_band)};
  const Family &f_t1 = families[0], &f_t2 = families[1], &f_e1 = families[2],
               &f_ro = families[3], &f_e2 = families[4];

  std::vector<std::vector<std::size_t>> strata(5);
  {
    Rng lhs_rng = Rng(seed).derive(detail::kFleetStream).derive(0x5712a7ULL);
    for (auto& perm : strata) {
      perm.resize(n_backends);
      for (std::size_t b = 0; b < n_backends; ++b) perm[b] = b;
      lhs_rng.shuffle(perm);
    }
  }

  std::vector<NoiseProfile> fleet;
  fleet.reserve(n_backends);
  for (std::size_t b = 0; b < n_backends; ++b) {
    Rng rng = Rng(seed).derive(detail::kFleetStream).derive(b);
    NoiseProfile p;
    char buf[32];
    std::snprintf(buf, sizeof buf, "backend_%02zu", b);
    p.backend_id = buf;
    p.backend_index = b;
    p.tier = tier;
    p.fleet_seed = seed;
    p.graph = graph;
    p.timings = timings;
    const bool full = tier == NoiseTier::FullEmulation;
    const double c_t1 = f_t1.center(strata[0][b], n_backends, rng.next_double());
    const double c_t2 = f_t2.center(strata[1][b], n_backends, rng.next_double());
    const double c_e1 = f_e1.center(strata[2][b], n_backends, rng.next_double());
    const double c_ro = f_ro.center(strata[3][b], n_backends, rng.next_double());
    const double c_e2 = f_e2.center(strata[4][b], n_backends, rng.next_double());
    for (std::size_t q = 0; q < graph.n; ++q) {
      QubitParams qp;
      qp.t1 = f_t1.draw(rng, c_t1);
      qp.t2 = std::min(f_t2.draw(rng, c_t2), 2.0 * qp.t1);
      const double e1 = f_e1.draw(rng, c_e1);
      const double r01 = f_ro.draw(rng, c_ro);
      const double r10 = f_ro.draw(rng, c_ro);
      qp.eps_1q = full ? e1 : 0.0;
      qp.p01 = full ? r01 : 0.0;
      qp.p10 = full ? r10 : 0.0;
      p.base.push_back(qp);
    }
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      const double e2 = f_e2.draw(rng, c_e2);
      p.eps_2q_base.push_back(full ? e2 : 0.0);
    }
    p.current = p.base;
    p.eps_2q = p.eps_2q_base;
    p.validate();
    fleet.push_back(std::move(p));
  }
  return fleet;
}

// Resample current parameters around base for a newer calibration epoch.
// Deterministic in (fleet_seed, backend_index, epoch): jumping straight to
// epoch 7 gives the same numbers as stepping through 1..7.
inline void advance_calibration(NoiseProfile& p, std::size_t epoch,
                                const DriftSigmas& sigmas = {}) {
  if (epoch <= p.epoch)
    throw std::invalid_argument("advance_calibration: epoch must be newer than current");
  Rng rng = Rng(p.fleet_seed).derive(detail::kCalibStream).derive(p.backend_index).derive(epoch);
  const auto jitter = [&rng](double base, double sigma) {
    return base * std::exp(sigma * rng.normal());
  };
  for (std::size_t q = 0; q < p.base.size(); ++q) {
    QubitParams c;
    c.t1 = jitter(p.base[q].t1, sigmas.relax);
    c.t2 = jitter(p.base[q].t2, sigmas.relax);
    c.t2 = std::min(c.t2, 2.0 * c.t1);
    c.eps_1q = std::min(1.0, jitter(p.base[q].eps_1q, sigmas.gate));
    c.p01 = std::min(1.0, jitter(p.base[q].p01, sigmas.readout));
    c.p10 = std::min(1.0, jitter(p.base[q].p10, sigmas.readout));
    p.current[q] = c;
  }
  for (std::size_t e = 0; e < p.eps_2q_base.size(); ++e)
    p.eps_2q[e] = std::min(1.0, jitter(p.eps_2q_base[e], sigmas.gate));
  p.epoch = epoch;
  p.validate();
}

inline nlohmann::ordered_json qubit_params_to_json(const QubitParams& q) {
  return {{"t1", q.t1}, {"t2", q.t2}, {"eps_1q", q.eps_1q}, {"p01", q.p01}, {"p10", q.p10}};
}

inline QubitParams qubit_params_from_json(const nlohmann::json& j) {
  QubitParams q;
  q.t1 = j.at("t1").get<double>();
  q.t2 = j.at("t2").get<double>();
  q.eps_1q = j.at("eps_1q").get<double>();
  q.p01 = j.at("p01").get<double>();
  q.p10 = j.at("p10").get<double>();
  return q;
}

inline nlohmann::ordered_json profile_to_json(const NoiseProfile& p) {
  nlohmann::ordered_json j;
  j["backend_id"] = p.backend_id;
  j["backend_index"] = p.backend_index;
  j["tier"] = tier_name(p.tier);
  j["fleet_seed"] = p.fleet_seed;
  j["graph"] = graph_to_json(p.graph);
  j["timings"] = {{"t_1q", p.timings.t_1q},
                  {"t_2q", p.timings.t_2q},
                  {"t_meas", p.timings.t_meas},
                  {"t_reset", p.timings.t_reset}};
  auto& base = j["base"] = nlohmann::ordered_json::array();
  for (const auto& q : p.base) base.push_back(qubit_params_to_json(q));
  auto& cur = j["current"] = nlohmann::ordered_json::array();
  for (const auto& q : p.current) cur.push_back(qubit_params_to_json(q));
  j["eps_2q_base"] = p.eps_2q_base;
  j["eps_2q"] = p.eps_2q;
  j["epoch"] = p.epoch;
  return j;
}

inline NoiseProfile profile_from_json(const nlohmann::json& j) {
  NoiseProfile p;
  p.backend_id = j.at("backend_id").get<std::string>();
  p.backend_index = j.at("backend_index").get<std::size_t>();
  p.tier = tier_from_name(j.at("tier").get<std::string>());
  p.fleet_seed = j.at("fleet_seed").get<std::uint64_t>();
  p.graph = graph_from_json(j.at("graph"));
  p.timings.t_1q = j.at("timings").at("t_1q").get<double>();
  p.timings.t_2q = j.at("timings").at("t_2q").get<double>();
  p.timings.t_meas = j.at("timings").at("t_meas").get<double>();
  p.timings.t_reset = j.at("timings").at("t_reset").get<double>();
  for (const auto& jq : j.at("base")) p.base.push_back(qubit_params_from_json(jq));
  for (const auto& jq : j.at("current")) p.current.push_back(qubit_params_from_json(jq));
  p.eps_2q_base = j.at("eps_2q_base").get<std::vector<double>>();
  p.eps_2q = j.at("eps_2q").get<std::vector<double>>();
  p.epoch = j.at("epoch").get<std::size_t>();
  p.validate();
  return p;
}

}  // namespace qfp
