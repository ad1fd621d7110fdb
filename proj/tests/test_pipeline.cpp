#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfp/experiments.hpp"
#include "qfp/scenario.hpp"

namespace {

namespace fs = std::filesystem;

// A fleet small enough that every command finishes in well under a second.
qfp::Scenario tiny_scenario() {
  qfp::Scenario s;
  s.name = "tiny";
  s.fleet.n_backends = 3;
  s.circuit.code = {qfp::CodeFamily::Repetition, 3, 1};
  s.circuit.init = {qfp::LogicalInit::Zero};
  s.circuit.rounds = 2;
  s.schedule.jobs_per_backend = 6;
  s.schedule.shots_per_job = 16;
  s.schedule.job_interval_s = 600;
  s.schedule.calibration_interval_s = 86400;
  s.train.hidden = 8;
  s.train.batch_size = 16;
  s.train.max_epochs = 10;
  s.curve.grid = {1, 2, 4};
  s.curve.trials = 20;
  s.validate();
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& leaf) : path(fs::temp_directory_path() / leaf) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

nlohmann::json parse(const std::string& text) { return nlohmann::json::parse(text); }

std::string jsonl(const std::vector<qfp::SyndromeRecord>& records) {
  std::string out;
  for (const auto& r : records) out += qfp::record_to_json(r).dump() + "\n";
  return out;
}

}  // namespace

TEST_CASE("scenario json applies defaults and keeps explicit values", "[pipeline]") {
  const auto j = parse(R"({
    "name": "mini",
    "circuit": {"code": {"family": "repetition"}, "init": "0", "rounds": 2},
    "schedule": {"jobs_per_backend": 7},
    "train": {"hidden": 16}
  })");
  const qfp::Scenario s = qfp::scenario_from_json(j);
  REQUIRE(s.name == "mini");
  REQUIRE(s.pipeline == "supervised");
  REQUIRE(s.fleet.n_backends == 5);
  REQUIRE(s.fleet.tier == qfp::NoiseTier::FullEmulation);
  REQUIRE(s.circuit.code.family == qfp::CodeFamily::Repetition);
  REQUIRE(s.circuit.rounds == 2);
  REQUIRE(s.schedule.jobs_per_backend == 7);
  REQUIRE(s.schedule.shots_per_job == 256);
  REQUIRE(s.train.hidden == 16);
  REQUIRE(s.train.label == "backend");
  REQUIRE(s.mappings.mode == "trivial");
  REQUIRE(s.curve.grid == std::vector<std::size_t>{1, 3, 10, 30, 100, 300, 500, 1000, 2000});
  s.validate();
}

TEST_CASE("scenario json rejects unknown keys at any level", "[pipeline]") {
  const char* base = R"({
    "circuit": {"code": {"family": "repetition"}, "init": "0", "rounds": 2}
  })";
  auto top = parse(base);
  top["surprise"] = 1;
  REQUIRE_THROWS_AS(qfp::scenario_from_json(top), std::invalid_argument);

  auto nested = parse(base);
  nested["train"] = {{"hidden", 8}, {"momentum", 0.9}};
  REQUIRE_THROWS_AS(qfp::scenario_from_json(nested), std::invalid_argument);

  auto deep = parse(base);
  deep["fleet"] = {{"topology", {{"kind", "circuit"}, {"wraparound", true}}}};
  REQUIRE_THROWS_AS(qfp::scenario_from_json(deep), std::invalid_argument);
}

TEST_CASE("scenario validation catches bad parameters", "[pipeline]") {
  qfp::Scenario s = tiny_scenario();
  s.fleet.n_backends = 1;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);

  s = tiny_scenario();
  s.train.train_fraction = 1.0;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);

  s = tiny_scenario();
  s.train.label = "qubit";
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);

  s = tiny_scenario();
  s.fleet.topology.kind = "torus";
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);

  s = tiny_scenario();
  s.curve.grid = {4, 4};
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);

  s = tiny_scenario();
  s.dishonest.push_back({"backend_07", 0, "backend_00"});
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);

  s = tiny_scenario();
  s.dishonest.push_back({"backend_00", 99, "backend_01"});
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);

  s = tiny_scenario();
  s.drift.days_a = {7};
  s.drift.day_test = 7;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("load_scenario reports the offending file", "[pipeline]") {
  TempDir tmp("qfp_scenario_io");
  fs::create_directories(tmp.path);
  const fs::path bad = tmp.path / "bad.json";
  std::ofstream(bad) << "{ not json";
  try {
    qfp::load_scenario(bad.string());
    FAIL("expected a parse failure");
  } catch (const std::exception& e) {
    REQUIRE(std::string(e.what()).find("bad.json") != std::string::npos);
  }
  REQUIRE_THROWS(qfp::load_scenario((tmp.path / "absent.json").string()));

  const fs::path good = tmp.path / "good.json";
  std::ofstream(good) << R"({
    "name": "roundtrip",
    "circuit": {"code": {"family": "steane"}, "init": "0", "rounds": 3}
  })";
  const qfp::Scenario s = qfp::load_scenario(good.string());
  REQUIRE(s.name == "roundtrip");
  REQUIRE(s.circuit.code.family == qfp::CodeFamily::Steane);
}

TEST_CASE("build_fleet wires mappings for both modes", "[pipeline]") {
  const qfp::Scenario s = tiny_scenario();
  const qfp::FleetArtifacts a = qfp::build_fleet(s, 5);
  REQUIRE(a.mappings.size() == 1);
  REQUIRE(a.mappings[0].id == "trivial");
  REQUIRE(a.mapped.size() == 1);
  REQUIRE(a.profiles.size() == 3);

  qfp::Scenario e = tiny_scenario();
  e.fleet.topology.kind = "heavy_hex";
  e.fleet.topology.rows = 2;
  e.fleet.topology.cols = 3;
  e.mappings.mode = "embeddings";
  e.mappings.count = 4;
  e.validate();
  const qfp::FleetArtifacts b = qfp::build_fleet(e, 5);
  const qfp::FleetArtifacts b2 = qfp::build_fleet(e, 5);
  REQUIRE(b.mappings.size() == 4);
  std::set<std::string> names;
  for (std::size_t m = 0; m < b.mappings.size(); ++m) {
    REQUIRE(qfp::mapping_to_json(b.mappings[m]) == qfp::mapping_to_json(b2.mappings[m]));
    names.insert(b.mappings[m].id);
    qfp::validate_mapping(b.mappings[m], b.cc.circuit, b.host);
  }
  REQUIRE(names.size() == 4);
}

TEST_CASE("collect_records covers the schedule in job-major time order", "[pipeline]") {
  const qfp::Scenario s = tiny_scenario();
  const qfp::FleetArtifacts fleet = qfp::build_fleet(s, 9);
  const auto times = qfp::standard_job_times(s.schedule);
  REQUIRE(times.size() == 6);
  REQUIRE(times[1] == 600.0);
  const auto records = qfp::collect_records(fleet, 9, times, s.schedule.shots_per_job,
                                            s.schedule.calibration_interval_s);
  REQUIRE(records.size() == 3 * 6 * 16);

  double last_t = 0;
  std::set<std::string> jobs;
  for (const auto& r : records) {
    REQUIRE(r.timestamp >= last_t);
    last_t = r.timestamp;
    REQUIRE(r.audit_backend_id == r.backend_id);
    REQUIRE(r.mapping_id == "trivial");
    REQUIRE(r.syndrome.size() == fleet.cc.generators.size() * s.circuit.rounds);
    jobs.insert(r.job_id);
  }
  REQUIRE(jobs.size() == 18);
  REQUIRE(jobs.count("backend_02_job_0005") == 1);

  const auto again = qfp::collect_records(fleet, 9, times, s.schedule.shots_per_job,
                                          s.schedule.calibration_interval_s);
  REQUIRE(jsonl(records) == jsonl(again));
}

TEST_CASE("a dishonest event reroutes one job and leaves an audit trail", "[pipeline]") {
  qfp::Scenario s = tiny_scenario();
  s.dishonest.push_back({"backend_01", 2, "backend_02"});
  s.validate();
  const qfp::FleetArtifacts fleet = qfp::build_fleet(s, 9);
  const auto times = qfp::standard_job_times(s.schedule);
  const auto honest = qfp::collect_records(fleet, 9, times, s.schedule.shots_per_job,
                                           s.schedule.calibration_interval_s);
  const auto routed = qfp::collect_records(fleet, 9, times, s.schedule.shots_per_job,
                                           s.schedule.calibration_interval_s, s.dishonest);
  REQUIRE(routed.size() == honest.size());

  std::size_t rerouted = 0;
  std::string honest_bits, routed_bits;
  for (std::size_t i = 0; i < routed.size(); ++i) {
    const auto& r = routed[i];
    if (r.job_id == "backend_01_job_0002") {
      REQUIRE(r.backend_id == "backend_01");
      REQUIRE(r.audit_backend_id == "backend_02");
      honest_bits += honest[i].syndrome;
      routed_bits += r.syndrome;
      ++rerouted;
    } else {
      REQUIRE(r.audit_backend_id == r.backend_id);
      REQUIRE(r.syndrome == honest[i].syndrome);
    }
  }
  REQUIRE(rerouted == 16);
  REQUIRE(routed_bits != honest_bits);  // a different device produced them
}

TEST_CASE("calibration epochs advance with the simulated clock", "[pipeline]") {
  const qfp::Scenario s = tiny_scenario();
  const qfp::FleetArtifacts fleet = qfp::build_fleet(s, 11);
  const double day = s.schedule.calibration_interval_s;
  // enough shots that a few-permille rate change is visible in the bits
  const auto same_epoch = qfp::collect_records(fleet, 11, {0.0, 0.5 * day}, 256, day);
  const auto next_epoch = qfp::collect_records(fleet, 11, {0.0, 1.5 * day}, 256, day);
  REQUIRE(same_epoch.size() == next_epoch.size());

  std::string first_a, first_b, second_a, second_b;
  for (std::size_t i = 0; i < same_epoch.size(); ++i) {
    REQUIRE(same_epoch[i].job_id == next_epoch[i].job_id);
    if (same_epoch[i].job_id.find("_job_0000") != std::string::npos) {
      first_a += same_epoch[i].syndrome;
      first_b += next_epoch[i].syndrome;
    } else {
      second_a += same_epoch[i].syndrome;
      second_b += next_epoch[i].syndrome;
    }
  }
  REQUIRE(first_a == first_b);    // same epoch, same job seed
  REQUIRE(second_a != second_b);  // recalibrated parameters changed the noise
}

TEST_CASE("split_by_job strides validation jobs through every class", "[pipeline]") {
  qfp::Dataset d;
  d.n_features = 1;
  for (std::size_t cls = 0; cls < 2; ++cls)
    for (std::size_t j = 0; j < 10; ++j)
      for (std::size_t r = 0; r < 3; ++r) {
        d.x.push_back({static_cast<double>(r)});
        d.y.push_back(cls);
        d.job_ids.push_back("c" + std::to_string(cls) + "_job_" + std::to_string(j));
      }
  const auto [train, val] = qfp::split_by_job(d, 0.8);
  REQUIRE(train.size() == 48);
  REQUIRE(val.size() == 12);
  std::set<std::string> train_jobs(train.job_ids.begin(), train.job_ids.end());
  std::set<std::string> val_jobs(val.job_ids.begin(), val.job_ids.end());
  for (const auto& j : val_jobs) REQUIRE(train_jobs.count(j) == 0);
  REQUIRE(val_jobs == std::set<std::string>{"c0_job_4", "c0_job_9", "c1_job_4", "c1_job_9"});

  const auto [train2, val2] = qfp::split_by_job(d, 0.5);
  REQUIRE(val2.size() == 30);

  qfp::Dataset lone;
  lone.n_features = 1;
  lone.x = {{0.0}, {1.0}};
  lone.y = {0, 0};
  lone.job_ids = {"only", "only"};
  REQUIRE_THROWS_AS(qfp::split_by_job(lone, 0.8), std::invalid_argument);
}

TEST_CASE("fleet collect train curve writes one artifact set", "[pipeline]") {
  const qfp::Scenario s = tiny_scenario();
  TempDir tmp("qfp_pipeline_run");
  const qfp::OutPaths out(tmp.str());

  qfp::cmd_fleet(s, 3, tmp.str(), false);
  REQUIRE(fs::exists(out.manifest()));
  REQUIRE(fs::exists(out.profile("backend_02")));
  REQUIRE(fs::exists(out.host()));
  REQUIRE(fs::exists(out.mappings()));
  REQUIRE(fs::exists(out.layout()));
  const auto man = parse(slurp(out.manifest()));
  REQUIRE(man.at("scenario") == "tiny");
  REQUIRE(man.at("seed") == 3);
  REQUIRE(man.at("tier") == "full_emulation");
  REQUIRE(man.at("n_backends") == 3);
  REQUIRE(man.at("n_mappings") == 1);

  // an occupied directory needs --force, and a seed mismatch is an error
  REQUIRE_THROWS_AS(qfp::cmd_fleet(s, 3, tmp.str(), false), std::invalid_argument);
  REQUIRE_NOTHROW(qfp::cmd_fleet(s, 3, tmp.str(), true));
  REQUIRE_THROWS_AS(qfp::cmd_collect(s, 4, tmp.str()), std::invalid_argument);

  qfp::cmd_collect(s, 3, tmp.str());
  const auto records = qfp::read_jsonl(out.records().string());
  REQUIRE(records.size() == 3 * 6 * 16);

  qfp::cmd_train(s, 3, tmp.str());
  const auto model = parse(slurp(out.model()));
  REQUIRE(model.at("labels").size() == 3);
  REQUIRE(model.at("features").at("mode") == "single_shot");
  const auto metrics = parse(slurp(out.metrics()));
  REQUIRE(metrics.contains("val_accuracy"));
  REQUIRE(metrics.at("per_class").size() == 3);
  REQUIRE(metrics.at("n_val_rows").get<std::size_t>() > 0);

  // the persisted model predicts exactly like the in-memory one
  const qfp::Mlp reloaded = qfp::Mlp::from_json(model.at("mlp"));
  const qfp::TrainArtifacts art = qfp::train_from_records(s, 3, records);
  for (std::size_t i = 0; i < art.val_set.size(); i += 7)
    REQUIRE(reloaded.predict(art.val_set.x[i]) == art.cal.model.predict(art.val_set.x[i]));

  qfp::cmd_curve(s, 3, tmp.str());
  std::ifstream curve(out.curve());
  std::string line;
  std::getline(curve, line);
  REQUIRE(line == "n_shots,class,accuracy");
  std::size_t rows = 0;
  while (std::getline(curve, line)) ++rows;
  REQUIRE(rows == s.curve.grid.size() * 4);  // three classes and the mean

  // byte-identical on rerun: the pipeline is a pure function of (scenario, seed)
  const std::string model_bytes = slurp(out.model());
  const std::string records_bytes = slurp(out.records());
  qfp::cmd_collect(s, 3, tmp.str());
  qfp::cmd_train(s, 3, tmp.str());
  REQUIRE(slurp(out.records()) == records_bytes);
  REQUIRE(slurp(out.model()) == model_bytes);
}

TEST_CASE("curve demands single-shot features", "[pipeline]") {
  qfp::Scenario s = tiny_scenario();
  s.train.mode = "mean_over_k";
  s.train.k = 4;
  s.validate();
  TempDir tmp("qfp_curve_mode");
  qfp::cmd_fleet(s, 3, tmp.str(), false);
  qfp::cmd_collect(s, 3, tmp.str());
  qfp::cmd_train(s, 3, tmp.str());
  REQUIRE(fs::exists(qfp::OutPaths(tmp.str()).table()));
  REQUIRE_THROWS_AS(qfp::cmd_curve(s, 3, tmp.str()), std::invalid_argument);
}

TEST_CASE("training needs at least two labels", "[pipeline]") {
  const qfp::Scenario s = tiny_scenario();
  const qfp::FleetArtifacts fleet = qfp::build_fleet(s, 9);
  auto records = qfp::collect_records(fleet, 9, qfp::standard_job_times(s.schedule),
                                      s.schedule.shots_per_job, s.schedule.calibration_interval_s);
  std::vector<qfp::SyndromeRecord> one_backend;
  for (const auto& r : records)
    if (r.backend_id == "backend_00") one_backend.push_back(r);
  REQUIRE_THROWS_AS(qfp::train_from_records(s, 9, one_backend), std::invalid_argument);
}

TEST_CASE("verify flags rerouted jobs and keeps honest ones", "[pipeline]") {
  qfp::Scenario s = tiny_scenario();
  s.circuit.rounds = 3;
  s.schedule.jobs_per_backend = 12;
  s.schedule.shots_per_job = 1024;  // job means must settle for a 3-backend fleet
  s.verify.eps_grid = {0.01, 0.02, 0.03, 0.05, 0.1, 0.2};
  s.dishonest.push_back({"backend_01", 9, "backend_02"});
  s.validate();

  const qfp::FleetArtifacts fleet = qfp::build_fleet(s, 21);
  const auto records =
      qfp::collect_records(fleet, 21, qfp::standard_job_times(s.schedule),
                           s.schedule.shots_per_job, s.schedule.calibration_interval_s,
                           s.dishonest);
  const qfp::VerifyReport rep = qfp::verify_from_records(s, records);

  // reference slice: first half of each claimed backend's jobs
  REQUIRE(rep.n_reference == 18);
  REQUIRE(rep.n_queries == 18);
  REQUIRE(rep.dishonest_total == 1);
  REQUIRE(rep.dishonest_flagged == 1);
  REQUIRE(rep.honest_total == 17);
  REQUIRE(rep.novel_total == 0);
  REQUIRE(rep.honest_flagged <= 2);
  for (const auto& v : rep.verdicts) {
    if (v.job_id == "backend_01_job_0009") {
      REQUIRE(v.claimed == "backend_01");
      REQUIRE(v.audit == "backend_02");
      REQUIRE(v.flagged);
    }
  }
  REQUIRE(rep.sweep.size() == s.verify.eps_grid.size() * s.verify.min_samples_grid.size());
  REQUIRE(rep.sweep_ari > 0.8);
}

TEST_CASE("verify treats an unfitted backend as novel", "[pipeline]") {
  qfp::Scenario s = tiny_scenario();
  s.fleet.n_backends = 4;
  s.circuit.rounds = 3;
  s.schedule.jobs_per_backend = 12;
  s.schedule.shots_per_job = 1024;
  s.verify.eps_grid = {0.01, 0.02, 0.03, 0.05, 0.1, 0.2};
  s.verify.fit_backends = {"backend_00", "backend_01", "backend_02"};
  s.validate();

  const qfp::FleetArtifacts fleet = qfp::build_fleet(s, 17);
  const auto records =
      qfp::collect_records(fleet, 17, qfp::standard_job_times(s.schedule),
                           s.schedule.shots_per_job, s.schedule.calibration_interval_s);
  const qfp::VerifyReport rep = qfp::verify_from_records(s, records);
  REQUIRE(rep.n_reference == 18);           // references come from fitted backends only
  REQUIRE(rep.n_queries == 18 + 12);        // plus every job of the unfitted one
  REQUIRE(rep.novel_total == 12);
  REQUIRE(rep.novel_flagged >= 10);
  REQUIRE(rep.honest_total == 18);
  REQUIRE(rep.honest_flagged <= 2);
}

TEST_CASE("verify exit path distinguishes clean and flagged runs", "[pipeline]") {
  qfp::Scenario s = tiny_scenario();
  s.circuit.rounds = 3;
  s.schedule.jobs_per_backend = 12;
  s.schedule.shots_per_job = 1024;
  s.verify.eps_grid = {0.01, 0.02, 0.03, 0.05, 0.1, 0.2};
  s.validate();

  TempDir tmp("qfp_verify_rc");
  qfp::cmd_fleet(s, 21, tmp.str(), false);
  qfp::cmd_collect(s, 21, tmp.str());
  const int clean = qfp::cmd_verify(s, 21, tmp.str());
  const auto rep = parse(slurp(qfp::OutPaths(tmp.str()).verify_report()));
  REQUIRE(clean == (rep.at("n_flagged").get<std::size_t>() ? 2 : 0));
  REQUIRE(rep.at("dishonest").at("total") == 0);

  std::ifstream pairs(qfp::OutPaths(tmp.str()).pairs());
  std::string header;
  std::getline(pairs, header);
  REQUIRE(header == "dt_s,distance,same_backend");

  qfp::Scenario bad = s;
  bad.dishonest.push_back({"backend_00", 8, "backend_01"});
  bad.dishonest.push_back({"backend_02", 10, "backend_01"});
  bad.validate();
  TempDir tmp2("qfp_verify_rc2");
  qfp::cmd_fleet(bad, 21, tmp2.str(), false);
  qfp::cmd_collect(bad, 21, tmp2.str());
  REQUIRE(qfp::cmd_verify(bad, 21, tmp2.str()) == 2);
}

TEST_CASE("drift report runs paired across seeds", "[pipeline]") {
  qfp::Scenario s = tiny_scenario();
  s.drift.n_seeds = 2;
  s.drift.jobs_per_day = 4;
  s.drift.shots_per_job = 32;
  s.drift.days_a = {1};
  s.drift.days_b = {1, 2};
  s.drift.day_test = 3;
  s.validate();

  const qfp::DriftReport rep = qfp::run_drift(s, 23);
  REQUIRE(rep.seeds.size() == 2);
  REQUIRE(rep.t_critical == 6.3138);
  for (const auto& r : rep.seeds) {
    REQUIRE(r.acc_a >= 0.0);
    REQUIRE(r.acc_a <= 1.0);
    REQUIRE(r.diff == r.acc_b - r.acc_a);
  }
  const qfp::DriftReport again = qfp::run_drift(s, 23);
  REQUIRE(rep.mean_a == again.mean_a);
  REQUIRE(rep.mean_b == again.mean_b);
  REQUIRE(rep.t_stat == again.t_stat);
  REQUIRE(rep.seeds[0].fleet_seed != rep.seeds[1].fleet_seed);
}

TEST_CASE("causal report compares tiers on the same fleets", "[pipeline]") {
  qfp::Scenario s = tiny_scenario();
  s.causal.n_seeds = 2;
  s.causal.jobs_per_backend = 5;
  s.causal.shots_per_job = 32;
  s.validate();

  const qfp::CausalReport rep = qfp::run_causal(s, 29);
  REQUIRE(rep.seeds.size() == 2);
  for (const auto& r : rep.seeds) {
    REQUIRE(r.erad_accuracy >= 0.0);
    REQUIRE(r.erad_accuracy <= 1.0);
    REQUIRE(r.full_accuracy >= 0.0);
    REQUIRE(r.full_accuracy <= 1.0);
  }
  const qfp::CausalReport again = qfp::run_causal(s, 29);
  REQUIRE(rep.mean_erad == again.mean_erad);
  REQUIRE(rep.mean_full == again.mean_full);

  // both tiers really share the drawn coherence times
  qfp::Scenario erad = s;
  erad.fleet.tier = qfp::NoiseTier::ERaD;
  const auto full_fleet = qfp::build_fleet(s, 31).profiles;
  const auto erad_fleet = qfp::build_fleet(erad, 31).profiles;
  for (std::size_t b = 0; b < full_fleet.size(); ++b) {
    REQUIRE(full_fleet[b].base.size() == erad_fleet[b].base.size());
    for (std::size_t q = 0; q < full_fleet[b].base.size(); ++q) {
      REQUIRE(full_fleet[b].base[q].t1 == erad_fleet[b].base[q].t1);
      REQUIRE(full_fleet[b].base[q].t2 == erad_fleet[b].base[q].t2);
      REQUIRE(erad_fleet[b].base[q].eps_1q == 0.0);
      REQUIRE(erad_fleet[b].base[q].p01 == 0.0);
    }
    for (double e2 : erad_fleet[b].eps_2q_base) REQUIRE(e2 == 0.0);
  }
}

TEST_CASE("pair distances show no time trend inside one calibration epoch", "[pipeline]") {
  qfp::Scenario s = tiny_scenario();
  s.circuit.rounds = 3;
  s.schedule.jobs_per_backend = 40;
  s.schedule.shots_per_job = 64;
  s.schedule.job_interval_s = 600;  // all 40 jobs inside day one: drift-free
  s.validate();
  const qfp::FleetArtifacts fleet = qfp::build_fleet(s, 41);
  const auto records =
      qfp::collect_records(fleet, 41, qfp::standard_job_times(s.schedule),
                           s.schedule.shots_per_job, s.schedule.calibration_interval_s);
  const auto pairs = qfp::pairwise_samples(qfp::summarize_jobs(records));
  std::vector<double> dt, dist;
  for (const auto& p : pairs) {
    if (!p.same_backend) continue;
    dt.push_back(p.dt);
    dist.push_back(p.dist);
  }
  REQUIRE(dt.size() == 3 * 40 * 39 / 2);
  REQUIRE(std::abs(qfp::pearson(dt, dist)) < 0.1);
}
