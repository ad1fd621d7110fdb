#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfp/codes.hpp"
#include "qfp/profile.hpp"
#include "qfp/topology.hpp"

namespace qfp {

struct TopologySpec {
  // circuit: host mirrors the experiment circuit's own interaction graph,
  // so the trivial layout is always valid.
  std::string kind = "circuit";  // circuit | surface_lattice | heavy_hex
  std::size_t distance = 3;      // surface_lattice
  std::size_t rows = 2, cols = 3;  // heavy_hex

  ConnectivityGraph build(const Circuit& experiment_circuit) const {
    if (kind == "circuit") return used_subgraph(experiment_circuit);
    if (kind == "surface_lattice") return surface_lattice(distance);
    if (kind == "heavy_hex") return heavy_hex(rows, cols);
    throw std::invalid_argument("scenario: unknown topology kind " + kind);
  }
};

struct FleetSection {
  std::size_t n_backends = 5;
  NoiseTier tier = NoiseTier::FullEmulation;
  TopologySpec topology;
};

struct MappingSection {
  std::string mode = "trivial";  // trivial | embeddings
  std::size_t count = 16;        // embeddings only
};

struct ScheduleSection {
  std::size_t jobs_per_backend = 40;
  std::size_t shots_per_job = 256;
  double job_interval_s = 1800.0;
  double calibration_interval_s = 86400.0;
};

struct DishonestEvent {
  std::string backend;  // claimed backend whose job is rerouted
  std::size_t job_index = 0;
  std::string actual;
};

struct TrainSection {
  std::string label = "backend";   // backend | backend_mapping
  std::string mode = "single_shot";  // single_shot | mean_over_k
  std::size_t k = 40;
  bool include_data_bits = false;
  std::size_t hidden = 128;
  double learning_rate = 0.05;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 60;
  double plateau_tol = 1e-4;
  std::size_t patience = 8;
  double train_fraction = 0.8;
};

struct CurveSection {
  std::vector<std::size_t> grid = {1, 3, 10, 30, 100, 300, 500, 1000, 2000};
  std::size_t trials = 200;
};

struct VerifySection {
  std::vector<double> eps_grid = {0.05, 0.1, 0.15, 0.2, 0.3, 0.5};
  std::vector<std::size_t> min_samples_grid = {3, 5};
  double reference_fraction = 0.5;
  std::vector<std::string> fit_backends;  // empty = all
};

struct DriftSection {
  std::vector<std::size_t> days_a = {1};
  std::vector<std::size_t> days_b = {1, 2};
  std::size_t day_test = 7;
  std::size_t n_seeds = 5;
  std::size_t jobs_per_day = 10;
  std::size_t shots_per_job = 256;
};

struct CausalSection {
  std::size_t n_seeds = 5;
  std::size_t jobs_per_backend = 15;
  std::size_t shots_per_job = 512;
};

struct Scenario {
  std::string name = "default";
  std::string pipeline = "supervised";  // supervised | unsupervised | causal
  FleetSection fleet;
  LogicalCircuitSpec circuit;
  MappingSection mappings;
  ScheduleSection schedule;
  std::vector<DishonestEvent> dishonest;
  TrainSection train;
  CurveSection curve;
  VerifySection verify;
  DriftSection drift;
  CausalSection causal;

  void validate() const {
    if (name.empty()) throw std::invalid_argument("scenario: name must not be empty");
    if (pipeline != "supervised" && pipeline != "unsupervised" && pipeline != "causal")
      throw std::invalid_argument("scenario: unknown pipeline " + pipeline);
    if (fleet.n_backends < 2)
      throw std::invalid_argument("scenario: a fleet needs at least 2 backends");
    circuit.validate();
    fleet.topology.build(build_circuit(circuit).circuit);  // throws on bad parameters
    if (mappings.mode != "trivial" && mappings.mode != "embeddings")
      throw std::invalid_argument("scenario: unknown mapping mode " + mappings.mode);
    if (mappings.mode == "embeddings" && mappings.count == 0)
      throw std::invalid_argument("scenario: embeddings count must be >= 1");
    if (schedule.jobs_per_backend == 0 || schedule.shots_per_job == 0)
      throw std::invalid_argument("scenario: schedule needs jobs and shots");
    if (schedule.job_interval_s <= 0 || schedule.calibration_interval_s <= 0)
      throw std::invalid_argument("scenario: schedule intervals must be positive");
    if (train.label != "backend" && train.label != "backend_mapping")
      throw std::invalid_argument("scenario: unknown train label " + train.label);
    if (train.mode != "single_shot" && train.mode != "mean_over_k")
      throw std::invalid_argument("scenario: unknown feature mode " + train.mode);
    if (train.mode == "mean_over_k" && train.k == 0)
      throw std::invalid_argument("scenario: mean_over_k needs k >= 1");
    if (train.train_fraction <= 0 || train.train_fraction >= 1)
      throw std::invalid_argument("scenario: train fraction must be in (0,1)");
    if (curve.trials == 0) throw std::invalid_argument("scenario: curve trials must be >= 1");
    for (std::size_t i = 1; i < curve.grid.size(); ++i)
      if (curve.grid[i] <= curve.grid[i - 1])
        throw std::invalid_argument("scenario: curve grid must be strictly ascending");
    if (verify.reference_fraction <= 0 || verify.reference_fraction >= 1)
      throw std::invalid_argument("scenario: reference fraction must be in (0,1)");
    if (verify.eps_grid.empty() || verify.min_samples_grid.empty())
      throw std::invalid_argument("scenario: verify grids must not be empty");
    if (drift.days_a.empty() || drift.days_b.empty() || drift.n_seeds < 2)
      throw std::invalid_argument("scenario: drift needs train days and >= 2 seeds");
    for (std::size_t d : drift.days_a)
      if (d == 0 || d >= drift.day_test)
        throw std::invalid_argument("scenario: drift train days must precede the test day");
    for (std::size_t d : drift.days_b)
      if (d == 0 || d >= drift.day_test)
        throw std::invalid_argument("scenario: drift train days must precede the test day");
    if (drift.jobs_per_day == 0 || drift.shots_per_job == 0)
      throw std::invalid_argument("scenario: drift needs jobs and shots");
    if (causal.n_seeds < 1 || causal.jobs_per_backend == 0 || causal.shots_per_job == 0)
      throw std::invalid_argument("scenario: causal needs seeds, jobs, and shots");
    const std::size_t n_b = fleet.n_backends;
    const auto known = [n_b](const std::string& id) {
      for (std::size_t b = 0; b < n_b; ++b) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "backend_%02zu", b);
        if (id == buf) return true;
      }
      return false;
    };
    for (const auto& ev : dishonest) {
      if (!known(ev.backend) || !known(ev.actual))
        throw std::invalid_argument("scenario: dishonest event names an unknown backend");
      if (ev.job_index >= schedule.jobs_per_backend)
        throw std::invalid_argument("scenario: dishonest event job index out of schedule");
    }
    for (const auto& id : verify.fit_backends)
      if (!known(id)) throw std::invalid_argument("scenario: verify names an unknown backend");
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const char* where,
                                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok)
      throw std::invalid_argument(std::string("scenario: unknown key \"") + key + "\" in " + where);
  }
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  detail::reject_unknown_keys(j, "scenario",
                              {"name", "pipeline", "fleet", "circuit", "mappings", "schedule",
                               "dishonest", "train", "curve", "verify", "drift", "causal"});
  s.name = j.value("name", s.name);
  s.pipeline = j.value("pipeline", s.pipeline);
  if (j.contains("fleet")) {
    const auto& f = j.at("fleet");
    detail::reject_unknown_keys(f, "fleet", {"n_backends", "tier", "topology"});
    s.fleet.n_backends = f.value("n_backends", s.fleet.n_backends);
    if (f.contains("tier")) s.fleet.tier = tier_from_name(f.at("tier").get<std::string>());
    if (f.contains("topology")) {
      const auto& t = f.at("topology");
      detail::reject_unknown_keys(t, "topology", {"kind", "distance", "rows", "cols"});
      s.fleet.topology.kind = t.value("kind", s.fleet.topology.kind);
      s.fleet.topology.distance = t.value("distance", s.fleet.topology.distance);
      s.fleet.topology.rows = t.value("rows", s.fleet.topology.rows);
      s.fleet.topology.cols = t.value("cols", s.fleet.topology.cols);
    }
  }
  if (j.contains("circuit")) {
    const auto& c = j.at("circuit");
    detail::reject_unknown_keys(c, "circuit",
                                {"code", "init", "gates", "rounds", "measure_data"});
    if (c.contains("code")) {
      const auto& k = c.at("code");
      detail::reject_unknown_keys(k, "code", {"family", "distance", "logical_qubits"});
      if (k.contains("family"))
        s.circuit.code.family = code_from_name(k.at("family").get<std::string>());
      s.circuit.code.distance = k.value("distance", s.circuit.code.distance);
      s.circuit.code.logical_qubits = k.value("logical_qubits", s.circuit.code.logical_qubits);
    }
    if (c.contains("init")) {
      s.circuit.init.clear();
      for (char ch : c.at("init").get<std::string>()) s.circuit.init.push_back(init_from_char(ch));
    }
    if (c.contains("gates")) {
      s.circuit.gates.clear();
      for (const auto& g : c.at("gates")) {
        const std::string kind = g.at(0).get<std::string>();
        if (kind == "x")
          s.circuit.gates.push_back(LogicalGate::x(g.at(1).get<std::size_t>()));
        else if (kind == "cnot")
          s.circuit.gates.push_back(
              LogicalGate::cnot(g.at(1).get<std::size_t>(), g.at(2).get<std::size_t>()));
        else
          throw std::invalid_argument("scenario: unknown logical gate " + kind);
      }
    }
    s.circuit.rounds = c.value("rounds", s.circuit.rounds);
    s.circuit.measure_data = c.value("measure_data", s.circuit.measure_data);
  }
  if (j.contains("mappings")) {
    const auto& m = j.at("mappings");
    detail::reject_unknown_keys(m, "mappings", {"mode", "count"});
    s.mappings.mode = m.value("mode", s.mappings.mode);
    s.mappings.count = m.value("count", s.mappings.count);
  }
  if (j.contains("schedule")) {
    const auto& sc = j.at("schedule");
    detail::reject_unknown_keys(
        sc, "schedule",
        {"jobs_per_backend", "shots_per_job", "job_interval_s", "calibration_interval_s"});
    s.schedule.jobs_per_backend = sc.value("jobs_per_backend", s.schedule.jobs_per_backend);
    s.schedule.shots_per_job = sc.value("shots_per_job", s.schedule.shots_per_job);
    s.schedule.job_interval_s = sc.value("job_interval_s", s.schedule.job_interval_s);
    s.schedule.calibration_interval_s =
        sc.value("calibration_interval_s", s.schedule.calibration_interval_s);
  }
  if (j.contains("dishonest")) {
    for (const auto& e : j.at("dishonest")) {
      detail::reject_unknown_keys(e, "dishonest", {"backend", "job_index", "actual"});
      DishonestEvent ev;
      ev.backend = e.at("backend").get<std::string>();
      ev.job_index = e.at("job_index").get<std::size_t>();
      ev.actual = e.at("actual").get<std::string>();
      s.dishonest.push_back(std::move(ev));
    }
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    detail::reject_unknown_keys(t, "train",
                                {"label", "mode", "k", "include_data_bits", "hidden",
                                 "learning_rate", "batch_size", "max_epochs", "plateau_tol",
                                 "patience", "train_fraction"});
    s.train.label = t.value("label", s.train.label);
    s.train.mode = t.value("mode", s.train.mode);
    s.train.k = t.value("k", s.train.k);
    s.train.include_data_bits = t.value("include_data_bits", s.train.include_data_bits);
    s.train.hidden = t.value("hidden", s.train.hidden);
    s.train.learning_rate = t.value("learning_rate", s.train.learning_rate);
    s.train.batch_size = t.value("batch_size", s.train.batch_size);
    s.train.max_epochs = t.value("max_epochs", s.train.max_epochs);
    s.train.plateau_tol = t.value("plateau_tol", s.train.plateau_tol);
    s.train.patience = t.value("patience", s.train.patience);
    s.train.train_fraction = t.value("train_fraction", s.train.train_fraction);
  }
  if (j.contains("curve")) {
    const auto& c = j.at("curve");
    detail::reject_unknown_keys(c, "curve", {"grid", "trials"});
    if (c.contains("grid")) s.curve.grid = c.at("grid").get<std::vector<std::size_t>>();
    s.curve.trials = c.value("trials", s.curve.trials);
  }
  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    detail::reject_unknown_keys(
        v, "verify", {"eps_grid", "min_samples_grid", "reference_fraction", "fit_backends"});
    if (v.contains("eps_grid")) s.verify.eps_grid = v.at("eps_grid").get<std::vector<double>>();
    if (v.contains("min_samples_grid"))
      s.verify.min_samples_grid = v.at("min_samples_grid").get<std::vector<std::size_t>>();
    s.verify.reference_fraction = v.value("reference_fraction", s.verify.reference_fraction);
    if (v.contains("fit_backends"))
      s.verify.fit_backends = v.at("fit_backends").get<std::vector<std::string>>();
  }
  if (j.contains("drift")) {
    const auto& d = j.at("drift");
    detail::reject_unknown_keys(
        d, "drift", {"days_a", "days_b", "day_test", "n_seeds", "jobs_per_day", "shots_per_job"});
    if (d.contains("days_a")) s.drift.days_a = d.at("days_a").get<std::vector<std::size_t>>();
    if (d.contains("days_b")) s.drift.days_b = d.at("days_b").get<std::vector<std::size_t>>();
    s.drift.day_test = d.value("day_test", s.drift.day_test);
    s.drift.n_seeds = d.value("n_seeds", s.drift.n_seeds);
    s.drift.jobs_per_day = d.value("jobs_per_day", s.drift.jobs_per_day);
    s.drift.shots_per_job = d.value("shots_per_job", s.drift.shots_per_job);
  }
  if (j.contains("causal")) {
    const auto& c = j.at("causal");
    detail::reject_unknown_keys(c, "causal", {"n_seeds", "jobs_per_backend", "shots_per_job"});
    s.causal.n_seeds = c.value("n_seeds", s.causal.n_seeds);
    s.causal.jobs_per_backend = c.value("jobs_per_backend", s.causal.jobs_per_backend);
    s.causal.shots_per_job = c.value("shots_per_job", s.causal.shots_per_job);
  }
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::invalid_argument("scenario " + path + " is not valid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace qfp
