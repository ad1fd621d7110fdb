#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfp/codes.hpp"
#include "qfp/profile.hpp"
#include "qfp/simulator.hpp"

namespace qfp {

struct Job {
  std::string job_id;
  std::string backend_id;   // claimed backend
  std::string mapping_id;
  std::size_t shots = 0;
  double submit_time = 0;   // simulated clock, seconds
  std::uint64_t seed = 0;   // job-level stream; shot k derives stream k
};

// One shot's result as logged. backend_id is what the provider claims;
// audit_backend_id is the ground truth used only for evaluation.
struct SyndromeRecord {
  std::string job_id;
  std::string backend_id;
  std::string audit_backend_id;
  std::string mapping_id;
  std::size_t shot_index = 0;
  double timestamp = 0;
  std::string syndrome;    // frame-referenced stabilizer bits, round-major
  std::string data_bits;   // optional final data readout, empty if absent
};

// Run one job's shots on the backend that actually executes it. The
// mapped circuit must already address `actual` backend's physical qubits.
// Shot k is reproducible in isolation from (job.seed, k).
inline std::vector<SyndromeRecord> execute_job(const Job& job, const NoiseProfile& actual,
                                               const CodeCircuit& cc,
                                               const Circuit& mapped_circuit) {
  if (job.shots == 0) throw std::invalid_argument("execute_job: job has zero shots");
  const ShotRunner runner(mapped_circuit, &actual);
  const Rng job_rng(job.seed);
  std::vector<SyndromeRecord> out;
  out.reserve(job.shots);
  for (std::size_t s = 0; s < job.shots; ++s) {
    Rng shot_rng = job_rng.derive(s);
    const ShotOutcome shot = runner.run(shot_rng);
    SyndromeRecord r;
    r.job_id = job.job_id;
    r.backend_id = job.backend_id;
    r.audit_backend_id = actual.backend_id;
    r.mapping_id = job.mapping_id;
    r.shot_index = s;
    r.timestamp = job.submit_time;
    r.syndrome = bits_to_string(extract_syndrome(cc.layout, shot.bits));
    if (!cc.layout.data_bit_pos.empty()) {
      std::vector<std::uint8_t> data;
      data.reserve(cc.layout.data_bit_pos.size());
      for (std::size_t pos : cc.layout.data_bit_pos) data.push_back(shot.bits[pos]);
      r.data_bits = bits_to_string(data);
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Same execution path, but the job's claimed backend metadata is kept
// while the shots actually run on `actual`; the mismatch is what the
// verification pipeline is supposed to catch. With claimed == actual this
// degenerates to an honest execute_job.
inline std::vector<SyndromeRecord> dishonest_route(const Job& job, const NoiseProfile& actual,
                                                   const CodeCircuit& cc,
                                                   const Circuit& mapped_circuit) {
  return execute_job(job, actual, cc, mapped_circuit);
}

inline nlohmann::ordered_json record_to_json(const SyndromeRecord& r) {
  nlohmann::ordered_json j;
  j["job_id"] = r.job_id;
  j["backend_id"] = r.backend_id;
  j["audit_backend_id"] = r.audit_backend_id;
  j["mapping_id"] = r.mapping_id;
  j["shot_index"] = r.shot_index;
  j["timestamp"] = r.timestamp;
  j["syndrome"] = r.syndrome;
  j["data_bits"] = r.data_bits;
  return j;
}

inline SyndromeRecord record_from_json(const nlohmann::json& j) {
  SyndromeRecord r;
  r.job_id = j.at("job_id").get<std::string>();
  r.backend_id = j.at("backend_id").get<std::string>();
  r.audit_backend_id = j.at("audit_backend_id").get<std::string>();
  r.mapping_id = j.at("mapping_id").get<std::string>();
  r.shot_index = j.at("shot_index").get<std::size_t>();
  r.timestamp = j.at("timestamp").get<double>();
  r.syndrome = j.at("syndrome").get<std::string>();
  r.data_bits = j.at("data_bits").get<std::string>();
  return r;
}

inline void append_jsonl(const std::string& path, const std::vector<SyndromeRecord>& records) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("append_jsonl: cannot open " + path);
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw std::runtime_error("append_jsonl: write failed for " + path);
}

inline std::vector<SyndromeRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_jsonl: cannot open " + path);
  std::vector<SyndromeRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("read_jsonl: bad record at " + path + ":" +
                               std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace qfp
