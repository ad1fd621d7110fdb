#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfp/cluster.hpp"
#include "qfp/eval.hpp"
#include "qfp/farm.hpp"
#include "qfp/features.hpp"
#include "qfp/mlp.hpp"
#include "qfp/scenario.hpp"

namespace qfp {

namespace detail {

// stream tags for deriving independent random streams from one run seed
constexpr std::uint64_t kEmbedStream = 0x3a9edULL;
constexpr std::uint64_t kJobStream = 0x10b5ULL;
constexpr std::uint64_t kTrainStream = 0x7a11ULL;
constexpr std::uint64_t kCurveStream = 0xcf2eULL;
constexpr std::uint64_t kDriftStream = 0xd21f7ULL;
constexpr std::uint64_t kCausalStream = 0xca5a1ULL;

}  // namespace detail

// Everything a run derives from the scenario and the seed before any job
// executes: the experiment circuit, the shared host topology, the mapping
// pool with pre-remapped circuits, and the backend noise profiles.
struct FleetArtifacts {
  CodeCircuit cc;
  ConnectivityGraph host;
  std::vector<Mapping> mappings;
  std::vector<Circuit> mapped;  // parallel to mappings
  std::vector<NoiseProfile> profiles;
};

inline FleetArtifacts build_fleet(const Scenario& s, std::uint64_t seed) {
  FleetArtifacts a;
  a.cc = build_circuit(s.circuit);
  a.host = s.fleet.topology.build(a.cc.circuit);
  if (s.mappings.mode == "trivial") {
    a.mappings = {trivial_layout(a.cc.circuit, a.host)};
  } else {
    const ConnectivityGraph pattern = used_subgraph(a.cc.circuit);
    const std::uint64_t embed_seed = Rng(seed).derive(detail::kEmbedStream).next_u64();
    a.mappings = find_isomorphic_embeddings(pattern, a.host, s.mappings.count, embed_seed);
    if (a.mappings.size() < 2)
      throw std::invalid_argument("build_fleet: host admits fewer than 2 embeddings");
  }
  a.mapped.reserve(a.mappings.size());
  for (const auto& m : a.mappings) a.mapped.push_back(remap(a.cc.circuit, m, a.host));
  a.profiles = generate_fleet(s.fleet.n_backends, a.host, s.fleet.tier, seed);
  return a;
}

inline std::vector<double> standard_job_times(const ScheduleSection& sc) {
  std::vector<double> t;
  t.reserve(sc.jobs_per_backend);
  for (std::size_t j = 0; j < sc.jobs_per_backend; ++j)
    t.push_back(static_cast<double>(j) * sc.job_interval_s);
  return t;
}

// One "day" is one calibration interval; day d starts at epoch d-1.
inline std::vector<double> drift_job_times(const ScheduleSection& sc, const DriftSection& d) {
  std::set<std::size_t> days(d.days_a.begin(), d.days_a.end());
  days.insert(d.days_b.begin(), d.days_b.end());
  days.insert(d.day_test);
  std::vector<double> t;
  for (std::size_t day : days)
    for (std::size_t j = 0; j < d.jobs_per_day; ++j)
      t.push_back(static_cast<double>(day - 1) * sc.calibration_interval_s +
                  static_cast<double>(j) * sc.job_interval_s);
  return t;
}

inline std::string job_name(const std::string& backend_id, std::size_t ordinal) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_job_%04zu", ordinal);
  return backend_id + buf;
}

// Run the whole fleet through the shared schedule. Jobs are executed in
// time order so calibration epochs only ever advance; each backend cycles
// through the mapping pool, and dishonest events reroute a (claimed
// backend, job ordinal) pair onto another backend's hardware while the
// logged claim stays put.
inline std::vector<SyndromeRecord> collect_records(const FleetArtifacts& fleet, std::uint64_t seed,
                                                   const std::vector<double>& job_times,
                                                   std::size_t shots_per_job,
                                                   double calibration_interval_s,
                                                   const std::vector<DishonestEvent>& dishonest = {}) {
  if (job_times.empty()) throw std::invalid_argument("collect_records: no jobs scheduled");
  if (shots_per_job == 0) throw std::invalid_argument("collect_records: zero shots per job");
  std::vector<NoiseProfile> profiles = fleet.profiles;  // working copies that drift
  std::map<std::string, std::size_t> backend_index;
  for (std::size_t b = 0; b < profiles.size(); ++b) backend_index[profiles[b].backend_id] = b;

  std::map<std::pair<std::string, std::size_t>, std::size_t> rerouted;
  for (const auto& ev : dishonest) {
    if (!backend_index.count(ev.backend) || !backend_index.count(ev.actual))
      throw std::invalid_argument("collect_records: dishonest event names an unknown backend");
    if (ev.job_index >= job_times.size())
      throw std::invalid_argument("collect_records: dishonest event job index out of schedule");
    rerouted[{ev.backend, ev.job_index}] = backend_index[ev.actual];
  }

  const Rng job_seeds = Rng(seed).derive(detail::kJobStream);
  std::vector<SyndromeRecord> out;
  out.reserve(job_times.size() * profiles.size() * shots_per_job);
  for (std::size_t j = 0; j < job_times.size(); ++j) {
    const double t = job_times[j];
    if (j > 0 && t < job_times[j - 1])
      throw std::invalid_argument("collect_records: job times must be non-decreasing");
    const auto epoch = static_cast<std::size_t>(t / calibration_interval_s);
    const std::size_t m = j % fleet.mappings.size();
    for (std::size_t b = 0; b < profiles.size(); ++b) {
      Job job;
      job.job_id = job_name(profiles[b].backend_id, j);
      job.backend_id = profiles[b].backend_id;
      job.mapping_id = fleet.mappings[m].id;
      job.shots = shots_per_job;
      job.submit_time = t;
      job.seed = job_seeds.derive(b, j).next_u64();
      std::size_t actual = b;
      const auto it = rerouted.find({job.backend_id, j});
      if (it != rerouted.end()) actual = it->second;
      if (epoch > profiles[actual].epoch) advance_calibration(profiles[actual], epoch);
      std::vector<SyndromeRecord> recs =
          dishonest_route(job, profiles[actual], fleet.cc, fleet.mapped[m]);
      out.insert(out.end(), std::make_move_iterator(recs.begin()),
                 std::make_move_iterator(recs.end()));
    }
  }
  return out;
}

inline LabelFn label_fn_for(const std::string& name) {
  if (name == "backend") return label_by_backend;
  if (name == "backend_mapping") return label_by_backend_mapping;
  throw std::invalid_argument("unknown label kind " + name);
}

inline FeatureOptions feature_options_for(const TrainSection& t) {
  FeatureOptions o;
  o.mode = t.mode == "mean_over_k" ? FeatureMode::MeanOverK : FeatureMode::SingleShot;
  o.k = o.mode == FeatureMode::MeanOverK ? t.k : 1;
  o.include_data_bits = t.include_data_bits;
  return o;
}

inline MlpConfig mlp_config_for(const TrainSection& t, std::size_t n_inputs,
                                std::size_t n_classes) {
  MlpConfig cfg;
  cfg.n_inputs = n_inputs;
  cfg.n_hidden = t.hidden;
  cfg.n_classes = n_classes;
  cfg.learning_rate = t.learning_rate;
  cfg.batch_size = t.batch_size;
  cfg.max_epochs = t.max_epochs;
  cfg.plateau_tol = t.plateau_tol;
  cfg.patience = t.patience;
  return cfg;
}

// Deterministic held-out split at job granularity, so no job contributes
// rows to both sides. Per class, every stride-th job (ordered by job_id)
// goes to validation; classes too small for the stride still surrender
// their last job.
inline std::pair<Dataset, Dataset> split_by_job(const Dataset& d, double train_fraction) {
  if (train_fraction <= 0 || train_fraction >= 1)
    throw std::invalid_argument("split_by_job: train fraction must be in (0,1)");
  if (d.size() == 0) throw std::invalid_argument("split_by_job: empty dataset");
  const auto stride =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(1.0 / (1.0 - train_fraction))));

  std::map<std::size_t, std::vector<std::string>> jobs_by_class;
  for (std::size_t i = 0; i < d.size(); ++i) jobs_by_class[d.y[i]].push_back(d.job_ids[i]);
  std::set<std::string> val_jobs;
  for (auto& [cls, jobs] : jobs_by_class) {
    std::sort(jobs.begin(), jobs.end());
    jobs.erase(std::unique(jobs.begin(), jobs.end()), jobs.end());
    if (jobs.size() < 2)
      throw std::invalid_argument("split_by_job: class " + std::to_string(cls) +
                                  " has a single job, cannot hold one out");
    bool any = false;
    for (std::size_t p = 0; p < jobs.size(); ++p)
      if (p % stride == stride - 1) {
        val_jobs.insert(jobs[p]);
        any = true;
      }
    if (!any) val_jobs.insert(jobs.back());
  }

  Dataset train, val;
  train.n_features = val.n_features = d.n_features;
  for (std::size_t i = 0; i < d.size(); ++i) {
    Dataset& side = val_jobs.count(d.job_ids[i]) ? val : train;
    side.x.push_back(d.x[i]);
    side.y.push_back(d.y[i]);
    side.job_ids.push_back(d.job_ids[i]);
  }
  return {std::move(train), std::move(val)};
}

struct TrainArtifacts {
  LabelSpec labels;
  FeatureOptions opts;
  CalibrationResult cal;
  double train_accuracy = 0;
  EvalMetrics val_metrics;
  Dataset train_set, val_set;
};

inline TrainArtifacts train_from_records(const Scenario& s, std::uint64_t seed,
                                         const std::vector<SyndromeRecord>& records) {
  if (records.empty()) throw std::invalid_argument("train_from_records: no records");
  const LabelFn fn = label_fn_for(s.train.label);
  const LabelSpec labels = LabelSpec::from_records(records, fn);
  if (labels.n_classes() < 2)
    throw std::invalid_argument("train_from_records: need at least 2 classes, got " +
                                std::to_string(labels.n_classes()));
  const FeatureOptions opts = feature_options_for(s.train);
  const Dataset all = featurize(records, fn, labels, opts);
  auto [train, val] = split_by_job(all, s.train.train_fraction);
  const MlpConfig cfg = mlp_config_for(s.train, all.n_features, labels.n_classes());
  Rng rng = Rng(seed).derive(detail::kTrainStream);
  CalibrationResult cal = train_with_calibration(cfg, train, val, rng);
  TrainArtifacts art{labels,
                     opts,
                     std::move(cal),
                     0,
                     EvalMetrics{},
                     std::move(train),
                     std::move(val)};
  art.train_accuracy = accuracy_of(art.cal.model, art.train_set);
  art.val_metrics = evaluate(art.cal.model, art.val_set, labels.n_classes());
  return art;
}

// Accuracy after collapsing "backend/mapping" labels to the backend part;
// plain backend labels pass through unchanged.
inline double collapsed_backend_accuracy(const Mlp& m, const LabelSpec& labels, const Dataset& d) {
  if (d.size() == 0) throw std::invalid_argument("collapsed_backend_accuracy: empty dataset");
  const auto backend_part = [](const std::string& s) { return s.substr(0, s.find('/')); };
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (backend_part(labels.classes[m.predict(d.x[i])]) == backend_part(labels.classes[d.y[i]]))
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(d.size());
}

struct JobVerdict {
  std::string job_id;
  std::string claimed;
  std::string audit;
  long cluster = -1;
  std::string cluster_backend;  // majority claimed backend of that cluster
  double distance = 0;
  std::string nearest_job;
  bool consistent = false;
  bool flagged = false;
};

struct VerifyReport {
  double eps = 0;
  std::size_t min_samples = 0;
  double sweep_ari = 0;
  std::vector<SweepPoint> sweep;
  SeparationStat separation;  // over reference job pairs
  std::vector<PairSample> pairs;
  std::size_t n_reference = 0;
  std::size_t n_queries = 0;
  std::vector<JobVerdict> verdicts;
  std::size_t n_flagged = 0;
  // query tallies: honest = claim true and backend was fitted; novel =
  // claim true but backend absent from the reference set; dishonest =
  // claim false.
  std::size_t honest_total = 0, honest_flagged = 0;
  std::size_t novel_total = 0, novel_flagged = 0;
  std::size_t dishonest_total = 0, dishonest_flagged = 0;
};

// Audit-free at decision time: the reference structure is clustered from
// the trusted early slice of each fitted backend's history, epsilon and
// min_samples are tuned against that slice's known identities, and every
// later job is judged by nearest-core distance plus cluster identity.
// Audit fields are used only for tuning on the reference slice and for
// the tallies.
inline VerifyReport verify_from_records(const Scenario& s,
                                        const std::vector<SyndromeRecord>& records) {
  const std::vector<JobSummary> summaries = summarize_jobs(records);

  std::set<std::string> fitted;
  if (s.verify.fit_backends.empty())
    for (const auto& js : summaries) fitted.insert(js.backend_id);
  else
    fitted.insert(s.verify.fit_backends.begin(), s.verify.fit_backends.end());
  if (fitted.size() < 2)
    throw std::invalid_argument("verify_from_records: need at least 2 fitted backends");

  std::map<std::string, std::size_t> claimed_counts;
  for (const auto& js : summaries) ++claimed_counts[js.backend_id];
  std::map<std::string, std::size_t> ref_quota;
  for (const auto& [id, n] : claimed_counts)
    if (fitted.count(id))
      ref_quota[id] = static_cast<std::size_t>(
          std::ceil(s.verify.reference_fraction * static_cast<double>(n)));

  std::vector<JobSummary> refs, queries;
  std::map<std::string, std::size_t> seen;  // summaries arrive sorted by job_id
  for (const auto& js : summaries) {
    const auto q = ref_quota.find(js.backend_id);
    if (q != ref_quota.end() && seen[js.backend_id] < q->second) {
      refs.push_back(js);
      ++seen[js.backend_id];
    } else {
      queries.push_back(js);
    }
  }
  if (refs.size() < 2)
    throw std::invalid_argument("verify_from_records: fewer than 2 reference jobs");
  if (queries.empty()) throw std::invalid_argument("verify_from_records: no query jobs left");

  VerifyReport rep;
  rep.n_reference = refs.size();
  rep.n_queries = queries.size();
  rep.pairs = pairwise_samples(refs);
  rep.separation = separation_stat(rep.pairs);

  std::vector<std::string> audit_ids;
  for (const auto& r : refs) audit_ids.push_back(r.audit_backend_id);
  std::sort(audit_ids.begin(), audit_ids.end());
  audit_ids.erase(std::unique(audit_ids.begin(), audit_ids.end()), audit_ids.end());
  std::vector<long> truth;
  for (const auto& r : refs)
    truth.push_back(static_cast<long>(
        std::lower_bound(audit_ids.begin(), audit_ids.end(), r.audit_backend_id) -
        audit_ids.begin()));

  rep.sweep = sweep_dbscan(refs, truth, s.verify.eps_grid, s.verify.min_samples_grid);
  const auto best = std::max_element(
      rep.sweep.begin(), rep.sweep.end(),
      [](const SweepPoint& a, const SweepPoint& b) { return a.ari < b.ari; });
  rep.eps = best->eps;
  rep.min_samples = best->min_samples;
  rep.sweep_ari = best->ari;

  const ClusterModel model = fit_clusters(refs, rep.eps, rep.min_samples);
  std::map<long, std::map<std::string, std::size_t>> votes;
  for (std::size_t i = 0; i < model.jobs.size(); ++i)
    if (model.labels[i] >= 0) ++votes[model.labels[i]][model.jobs[i].backend_id];
  std::map<long, std::string> cluster_backend;
  for (const auto& [c, counts] : votes) {
    std::string winner;
    std::size_t hi = 0;
    for (const auto& [id, n] : counts)  // map order breaks ties toward the lowest id
      if (n > hi) {
        hi = n;
        winner = id;
      }
    cluster_backend[c] = winner;
  }

  for (const auto& q : queries) {
    const Verdict v = verdict_for(model, q.vec);
    JobVerdict jv;
    jv.job_id = q.job_id;
    jv.claimed = q.backend_id;
    jv.audit = q.audit_backend_id;
    jv.cluster = v.cluster;
    jv.distance = v.distance;
    jv.nearest_job = v.nearest_job;
    jv.consistent = v.consistent;
    const auto cb = cluster_backend.find(v.cluster);
    if (cb != cluster_backend.end()) jv.cluster_backend = cb->second;
    jv.flagged = !jv.consistent || jv.cluster_backend != jv.claimed;
    rep.verdicts.push_back(jv);
    if (jv.flagged) ++rep.n_flagged;
    const bool claim_true = q.audit_backend_id == q.backend_id;
    if (!claim_true) {
      ++rep.dishonest_total;
      rep.dishonest_flagged += jv.flagged;
    } else if (!fitted.count(q.backend_id)) {
      ++rep.novel_total;
      rep.novel_flagged += jv.flagged;
    } else {
      ++rep.honest_total;
      rep.honest_flagged += jv.flagged;
    }
  }
  return rep;
}

namespace detail {

// one-sided 95% Student t critical values by degrees of freedom
inline double t_critical_95(std::size_t df) {
  static const double table[] = {6.3138, 2.9200, 2.3534, 2.1318, 2.0150, 1.9432, 1.8946, 1.8595,
                                 1.8331, 1.8125, 1.7959, 1.7823, 1.7709, 1.7613, 1.7531, 1.7459,
                                 1.7396, 1.7341, 1.7291, 1.7247, 1.7207, 1.7171, 1.7139, 1.7109,
                                 1.7081, 1.7056, 1.7033, 1.7011, 1.6991, 1.6973};
  if (df == 0) throw std::invalid_argument("t_critical_95: zero degrees of freedom");
  if (df <= 30) return table[df - 1];
  return 1.6449;  // normal limit, slightly anti-conservative above df 30
}

// plain single fit used by the paired drift and tier comparisons
inline Mlp fit_plain(const MlpConfig& cfg, const Dataset& train, Rng rng) {
  Rng init_rng = rng.derive(0x1e17);
  Rng train_rng = rng.derive(0x7ea1);
  Mlp model(cfg, init_rng);
  const std::vector<double> weights(cfg.n_classes, 1.0);
  model.train(train, weights, train_rng);
  return model;
}

}  // namespace detail

struct DriftSeedResult {
  std::uint64_t fleet_seed = 0;
  double acc_a = 0;  // trained on days_a, tested on day_test
  double acc_b = 0;  // trained on days_b, tested on day_test
  double diff = 0;   // acc_b - acc_a
};

struct DriftReport {
  std::vector<DriftSeedResult> seeds;
  double mean_a = 0, mean_b = 0, mean_diff = 0;
  double t_stat = 0;      // paired one-sided t over diff
  double t_critical = 0;  // 95% for df = n_seeds - 1
  bool improved = false;
};

// Does adding a second training day help a model score jobs from a later
// day, once calibration has drifted? Repeated over independent fleets.
inline DriftReport run_drift(const Scenario& s, std::uint64_t seed) {
  DriftReport rep;
  const auto in_days = [](const std::vector<std::size_t>& days, std::size_t d) {
    return std::find(days.begin(), days.end(), d) != days.end();
  };
  for (std::size_t si = 0; si < s.drift.n_seeds; ++si) {
    const std::uint64_t fleet_seed = Rng(seed).derive(detail::kDriftStream, si).next_u64();
    const FleetArtifacts fleet = build_fleet(s, fleet_seed);
    const std::vector<double> times = drift_job_times(s.schedule, s.drift);
    const std::vector<SyndromeRecord> records = collect_records(
        fleet, fleet_seed, times, s.drift.shots_per_job, s.schedule.calibration_interval_s);

    std::vector<SyndromeRecord> set_a, set_b, set_t;
    for (const auto& r : records) {
      const auto day =
          static_cast<std::size_t>(r.timestamp / s.schedule.calibration_interval_s) + 1;
      if (day == s.drift.day_test) set_t.push_back(r);
      if (in_days(s.drift.days_a, day)) set_a.push_back(r);
      if (in_days(s.drift.days_b, day)) set_b.push_back(r);
    }
    const LabelSpec labels = LabelSpec::from_records(records, label_by_backend);
    const Dataset da = featurize(set_a, label_by_backend, labels);
    const Dataset db = featurize(set_b, label_by_backend, labels);
    const Dataset dt = featurize(set_t, label_by_backend, labels);
    const MlpConfig cfg = mlp_config_for(s.train, da.n_features, labels.n_classes());

    DriftSeedResult r;
    r.fleet_seed = fleet_seed;
    r.acc_a = accuracy_of(
        detail::fit_plain(cfg, da, Rng(fleet_seed).derive(detail::kTrainStream, 0xA)), dt);
    r.acc_b = accuracy_of(
        detail::fit_plain(cfg, db, Rng(fleet_seed).derive(detail::kTrainStream, 0xB)), dt);
    r.diff = r.acc_b - r.acc_a;
    rep.seeds.push_back(r);
    rep.mean_a += r.acc_a;
    rep.mean_b += r.acc_b;
    rep.mean_diff += r.diff;
  }
  const auto n = static_cast<double>(rep.seeds.size());
  rep.mean_a /= n;
  rep.mean_b /= n;
  rep.mean_diff /= n;
  double ss = 0;
  for (const auto& r : rep.seeds) ss += (r.diff - rep.mean_diff) * (r.diff - rep.mean_diff);
  const double sd = std::sqrt(ss / (n - 1));
  if (sd == 0)
    rep.t_stat = rep.mean_diff == 0 ? 0
                                    : std::copysign(std::numeric_limits<double>::infinity(),
                                                    rep.mean_diff);
  else
    rep.t_stat = rep.mean_diff / (sd / std::sqrt(n));
  rep.t_critical = detail::t_critical_95(rep.seeds.size() - 1);
  rep.improved = rep.t_stat > rep.t_critical;
  return rep;
}

struct CausalSeedResult {
  std::uint64_t fleet_seed = 0;
  double erad_accuracy = 0;
  double full_accuracy = 0;
};

struct CausalReport {
  std::vector<CausalSeedResult> seeds;
  double mean_erad = 0, mean_full = 0;
};

// Ablate the noise channels: the relaxation-only tier and the full tier
// share every drawn coherence time, so any accuracy gap is caused by the
// channels the full tier adds.
inline CausalReport run_causal(const Scenario& s, std::uint64_t seed) {
  CausalReport rep;
  for (std::size_t si = 0; si < s.causal.n_seeds; ++si) {
    const std::uint64_t fleet_seed = Rng(seed).derive(detail::kCausalStream, si).next_u64();
    CausalSeedResult r;
    r.fleet_seed = fleet_seed;
    for (const NoiseTier tier : {NoiseTier::ERaD, NoiseTier::FullEmulation}) {
      Scenario arm = s;
      arm.fleet.tier = tier;
      const FleetArtifacts fleet = build_fleet(arm, fleet_seed);
      std::vector<double> times;
      for (std::size_t j = 0; j < s.causal.jobs_per_backend; ++j)
        times.push_back(static_cast<double>(j) * s.schedule.job_interval_s);
      const std::vector<SyndromeRecord> records = collect_records(
          fleet, fleet_seed, times, s.causal.shots_per_job, s.schedule.calibration_interval_s);
      const LabelSpec labels = LabelSpec::from_records(records, label_by_backend);
      const Dataset all = featurize(records, label_by_backend, labels);
      auto [train, val] = split_by_job(all, s.train.train_fraction);
      const MlpConfig cfg = mlp_config_for(s.train, all.n_features, labels.n_classes());
      const Mlp model =
          detail::fit_plain(cfg, train, Rng(fleet_seed).derive(detail::kTrainStream, 0xC));
      const double acc = accuracy_of(model, val);
      (tier == NoiseTier::ERaD ? r.erad_accuracy : r.full_accuracy) = acc;
    }
    rep.seeds.push_back(r);
    rep.mean_erad += r.erad_accuracy;
    rep.mean_full += r.full_accuracy;
  }
  rep.mean_erad /= static_cast<double>(rep.seeds.size());
  rep.mean_full /= static_cast<double>(rep.seeds.size());
  return rep;
}

// ---------------------------------------------------------------------------
// command layer: each cmd_* turns one subcommand into files under out/

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json(const std::filesystem::path& path, const char* hint) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path.string() + " (" + hint + ")");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + " is not valid JSON: " + e.what());
  }
  return j;
}

inline std::string read_text(const std::filesystem::path& path, const char* hint) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string() + " (" + hint + ")");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_jsonl(const std::filesystem::path& path,
                        const std::vector<SyndromeRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string csv_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

struct OutPaths {
  std::filesystem::path root;

  explicit OutPaths(std::string dir) : root(std::move(dir)) {}
  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path fleet_dir() const { return root / "fleet"; }
  std::filesystem::path profile(const std::string& backend_id) const {
    return fleet_dir() / (backend_id + ".json");
  }
  std::filesystem::path host() const { return root / "host.json"; }
  std::filesystem::path mappings() const { return root / "mappings.json"; }
  std::filesystem::path layout() const { return root / "layout.json"; }
  std::filesystem::path records() const { return root / "records.jsonl"; }
  std::filesystem::path model() const { return root / "model.json"; }
  std::filesystem::path metrics() const { return root / "metrics.json"; }
  std::filesystem::path table() const { return root / "table.csv"; }
  std::filesystem::path curve() const { return root / "curve.csv"; }
  std::filesystem::path verify_report() const { return root / "verify.json"; }
  std::filesystem::path pairs() const { return root / "pairs.csv"; }
  std::filesystem::path drift_report() const { return root / "drift.json"; }
  std::filesystem::path drift_csv() const { return root / "drift.csv"; }
  std::filesystem::path causal_report() const { return root / "causal.json"; }
  std::filesystem::path causal_csv() const { return root / "causal.csv"; }
};

inline FleetArtifacts cmd_fleet(const Scenario& s, std::uint64_t seed, const std::string& out_dir,
                                bool force) {
  const OutPaths out(out_dir);
  namespace fs = std::filesystem;
  if (fs::exists(out.root)) {
    if (!fs::is_directory(out.root))
      throw std::invalid_argument(out.root.string() + " exists and is not a directory");
    if (!fs::is_empty(out.root) && !force)
      throw std::invalid_argument(out.root.string() +
                                  " is not empty; pass --force to write into it");
  }
  FleetArtifacts fleet = build_fleet(s, seed);
  fs::create_directories(out.fleet_dir());
  for (const auto& p : fleet.profiles) detail::write_json(out.profile(p.backend_id), profile_to_json(p));
  detail::write_json(out.host(), graph_to_json(fleet.host));
  nlohmann::ordered_json maps;
  maps["mappings"] = nlohmann::ordered_json::array();
  for (const auto& m : fleet.mappings) maps["mappings"].push_back(mapping_to_json(m));
  detail::write_json(out.mappings(), maps);
  detail::write_json(out.layout(), layout_to_json(fleet.cc.layout));
  nlohmann::ordered_json man;
  man["scenario"] = s.name;
  man["pipeline"] = s.pipeline;
  man["seed"] = seed;
  man["tier"] = tier_name(s.fleet.tier);
  man["n_backends"] = fleet.profiles.size();
  man["n_mappings"] = fleet.mappings.size();
  detail::write_json(out.manifest(), man);
  return fleet;
}

// Rebuild the in-memory fleet from the files cmd_fleet wrote; the circuit
// itself is cheap to rebuild from the scenario and is validated against
// the stored layout.
inline FleetArtifacts load_fleet(const Scenario& s, std::uint64_t seed,
                                 const std::string& out_dir) {
  const OutPaths out(out_dir);
  const nlohmann::json man = detail::read_json(out.manifest(), "run the fleet command first");
  if (man.at("seed").get<std::uint64_t>() != seed)
    throw std::invalid_argument("seed mismatch: fleet at " + out_dir + " was built with seed " +
                                std::to_string(man.at("seed").get<std::uint64_t>()));
  FleetArtifacts fleet;
  fleet.cc = build_circuit(s.circuit);
  fleet.host = graph_from_json(detail::read_json(out.host(), "run the fleet command first"));
  const nlohmann::json maps = detail::read_json(out.mappings(), "run the fleet command first");
  for (const auto& mj : maps.at("mappings")) fleet.mappings.push_back(mapping_from_json(mj));
  if (fleet.mappings.empty())
    throw std::runtime_error(out.mappings().string() + " contains no mappings");
  for (const auto& m : fleet.mappings) fleet.mapped.push_back(remap(fleet.cc.circuit, m, fleet.host));
  const auto n_backends = man.at("n_backends").get<std::size_t>();
  for (std::size_t b = 0; b < n_backends; ++b) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "backend_%02zu", b);
    fleet.profiles.push_back(
        profile_from_json(detail::read_json(out.profile(buf), "fleet profile missing")));
  }
  const std::string stored_layout = detail::read_text(out.layout(), "run the fleet command first");
  if (stored_layout != layout_to_json(fleet.cc.layout).dump(2) + "\n")
    throw std::runtime_error("stored layout does not match the scenario circuit");
  return fleet;
}

inline void cmd_collect(const Scenario& s, std::uint64_t seed, const std::string& out_dir) {
  const OutPaths out(out_dir);
  const FleetArtifacts fleet = load_fleet(s, seed, out_dir);
  const std::vector<SyndromeRecord> records =
      collect_records(fleet, seed, standard_job_times(s.schedule), s.schedule.shots_per_job,
                      s.schedule.calibration_interval_s, s.dishonest);
  detail::write_jsonl(out.records(), records);
}

inline void cmd_train(const Scenario& s, std::uint64_t seed, const std::string& out_dir) {
  const OutPaths out(out_dir);
  const std::vector<SyndromeRecord> records = read_jsonl(out.records().string());
  const TrainArtifacts art = train_from_records(s, seed, records);

  nlohmann::ordered_json mj;
  mj["labels"] = art.labels.classes;
  mj["features"]["mode"] = s.train.mode;
  mj["features"]["k"] = art.opts.k;
  mj["features"]["include_data_bits"] = art.opts.include_data_bits;
  mj["class_weights"] = art.cal.class_weights;
  mj["calibration_rounds"] = art.cal.rounds;
  mj["mlp"] = art.cal.model.to_json();
  detail::write_json(out.model(), mj);

  nlohmann::ordered_json met;
  met["train_accuracy"] = art.train_accuracy;
  met["val_accuracy"] = art.val_metrics.accuracy;
  met["macro_fpr"] = art.val_metrics.macro_fpr;
  met["macro_fnr"] = art.val_metrics.macro_fnr;
  met["n_train_rows"] = art.train_set.size();
  met["n_val_rows"] = art.val_set.size();
  met["per_class"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < art.labels.n_classes(); ++c) {
    const ClassMetrics& cm = art.val_metrics.per_class[c];
    nlohmann::ordered_json row;
    row["class"] = art.labels.classes[c];
    row["support"] = cm.support;
    row["recall"] = cm.recall;
    row["fpr"] = cm.fpr;
    row["fnr"] = cm.fnr;
    met["per_class"].push_back(row);
  }
  detail::write_json(out.metrics(), met);

  if (art.opts.mode == FeatureMode::MeanOverK) {
    std::string csv = "code,accuracy,fpr,fnr\n";
    csv += std::string(code_name(s.circuit.code.family)) + "," +
           detail::csv_num(art.val_metrics.accuracy) + "," +
           detail::csv_num(art.val_metrics.macro_fpr) + "," +
           detail::csv_num(art.val_metrics.macro_fnr) + "\n";
    detail::write_text(out.table(), csv);
  }
}

inline void cmd_curve(const Scenario& s, std::uint64_t seed, const std::string& out_dir) {
  if (s.train.mode != "single_shot")
    throw std::invalid_argument("curve needs single_shot features; scenario trains " +
                                s.train.mode);
  const OutPaths out(out_dir);
  const std::vector<SyndromeRecord> records = read_jsonl(out.records().string());
  const nlohmann::json mj = detail::read_json(out.model(), "run the train command first");
  const Mlp model = Mlp::from_json(mj.at("mlp"));
  LabelSpec labels;
  labels.classes = mj.at("labels").get<std::vector<std::string>>();

  const LabelFn fn = label_fn_for(s.train.label);
  const Dataset all = featurize(records, fn, labels, feature_options_for(s.train));
  auto [train, val] = split_by_job(all, s.train.train_fraction);
  (void)train;
  Rng rng = Rng(seed).derive(detail::kCurveStream);
  const std::vector<ShotCurvePoint> points =
      accuracy_vs_shots(model, val, labels, s.curve.grid, s.curve.trials, rng);
  write_curve_csv(out.curve().string(), points);
}

inline int cmd_verify(const Scenario& s, std::uint64_t seed, const std::string& out_dir) {
  (void)seed;  // verification is deterministic given the records
  const OutPaths out(out_dir);
  const std::vector<SyndromeRecord> records = read_jsonl(out.records().string());
  const VerifyReport rep = verify_from_records(s, records);

  std::string csv = "dt_s,distance,same_backend\n";
  for (const auto& p : rep.pairs)
    csv += detail::csv_num(p.dt) + "," + detail::csv_num(p.dist) + "," +
           (p.same_backend ? "1" : "0") + "\n";
  detail::write_text(out.pairs(), csv);

  nlohmann::ordered_json j;
  j["eps"] = rep.eps;
  j["min_samples"] = rep.min_samples;
  j["sweep_ari"] = rep.sweep_ari;
  j["separation"]["overlap"] = rep.separation.overlap;
  j["separation"]["threshold"] = rep.separation.threshold;
  j["separation"]["mean_same"] = rep.separation.mean_same;
  j["separation"]["mean_diff"] = rep.separation.mean_diff;
  j["n_reference"] = rep.n_reference;
  j["n_queries"] = rep.n_queries;
  j["n_flagged"] = rep.n_flagged;
  j["honest"] = {{"total", rep.honest_total}, {"flagged", rep.honest_flagged}};
  j["novel"] = {{"total", rep.novel_total}, {"flagged", rep.novel_flagged}};
  j["dishonest"] = {{"total", rep.dishonest_total}, {"flagged", rep.dishonest_flagged}};
  j["sweep"] = nlohmann::ordered_json::array();
  for (const auto& p : rep.sweep)
    j["sweep"].push_back({{"eps", p.eps},
                          {"min_samples", p.min_samples},
                          {"ari", p.ari},
                          {"n_clusters", p.n_clusters},
                          {"n_noise", p.n_noise}});
  j["verdicts"] = nlohmann::ordered_json::array();
  for (const auto& v : rep.verdicts)
    j["verdicts"].push_back({{"job_id", v.job_id},
                             {"claimed", v.claimed},
                             {"audit", v.audit},
                             {"cluster", v.cluster},
                             {"cluster_backend", v.cluster_backend},
                             {"distance", v.distance},
                             {"nearest_job", v.nearest_job},
                             {"consistent", v.consistent},
                             {"flagged", v.flagged}});
  detail::write_json(out.verify_report(), j);
  return rep.n_flagged ? 2 : 0;
}

inline void cmd_drift(const Scenario& s, std::uint64_t seed, const std::string& out_dir) {
  const OutPaths out(out_dir);
  std::filesystem::create_directories(out.root);
  const DriftReport rep = run_drift(s, seed);

  std::string csv = "seed_index,fleet_seed,acc_days_a,acc_days_b,diff\n";
  for (std::size_t i = 0; i < rep.seeds.size(); ++i) {
    const DriftSeedResult& r = rep.seeds[i];
    csv += std::to_string(i) + "," + std::to_string(r.fleet_seed) + "," +
           detail::csv_num(r.acc_a) + "," + detail::csv_num(r.acc_b) + "," +
           detail::csv_num(r.diff) + "\n";
  }
  detail::write_text(out.drift_csv(), csv);

  nlohmann::ordered_json j;
  j["mean_acc_days_a"] = rep.mean_a;
  j["mean_acc_days_b"] = rep.mean_b;
  j["mean_diff"] = rep.mean_diff;
  j["t_stat"] = rep.t_stat;
  j["t_critical"] = rep.t_critical;
  j["improved"] = rep.improved;
  j["seeds"] = nlohmann::ordered_json::array();
  for (const auto& r : rep.seeds)
    j["seeds"].push_back({{"fleet_seed", r.fleet_seed},
                          {"acc_days_a", r.acc_a},
                          {"acc_days_b", r.acc_b},
                          {"diff", r.diff}});
  detail::write_json(out.drift_report(), j);
}

inline void cmd_causal(const Scenario& s, std::uint64_t seed, const std::string& out_dir) {
  const OutPaths out(out_dir);
  std::filesystem::create_directories(out.root);
  const CausalReport rep = run_causal(s, seed);

  std::string csv = "seed_index,fleet_seed,erad_accuracy,full_accuracy\n";
  for (std::size_t i = 0; i < rep.seeds.size(); ++i) {
    const CausalSeedResult& r = rep.seeds[i];
    csv += std::to_string(i) + "," + std::to_string(r.fleet_seed) + "," +
           detail::csv_num(r.erad_accuracy) + "," + detail::csv_num(r.full_accuracy) + "\n";
  }
  detail::write_text(out.causal_csv(), csv);

  nlohmann::ordered_json j;
  j["mean_erad_accuracy"] = rep.mean_erad;
  j["mean_full_accuracy"] = rep.mean_full;
  j["seeds"] = nlohmann::ordered_json::array();
  for (const auto& r : rep.seeds)
    j["seeds"].push_back({{"fleet_seed", r.fleet_seed},
                          {"erad_accuracy", r.erad_accuracy},
                          {"full_accuracy", r.full_accuracy}});
  detail::write_json(out.causal_report(), j);
}

}  // namespace qfp
