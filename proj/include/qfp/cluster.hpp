#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfp/features.hpp"

namespace qfp {

// One job reduced to the element-wise mean of its logged bit strings.
struct JobSummary {
  std::string job_id;
  std::string backend_id;
  std::string audit_backend_id;
  std::string mapping_id;
  double timestamp = 0;
  std::vector<double> vec;
};

// Collapse records into per-job mean vectors, sorted by job_id so the
// result is independent of record order. Metadata must be constant within
// a job.
inline std::vector<JobSummary> summarize_jobs(const std::vector<SyndromeRecord>& records,
                                              bool include_data_bits = false) {
  if (records.empty()) throw std::invalid_argument("summarize_jobs: no records");
  std::map<std::string, JobSummary> jobs;
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) {
    const std::vector<double> f = detail::record_features(r, include_data_bits);
    auto [it, fresh] = jobs.try_emplace(r.job_id);
    JobSummary& s = it->second;
    if (fresh) {
      s.job_id = r.job_id;
      s.backend_id = r.backend_id;
      s.audit_backend_id = r.audit_backend_id;
      s.mapping_id = r.mapping_id;
      s.timestamp = r.timestamp;
      s.vec.assign(f.size(), 0.0);
    } else if (s.backend_id != r.backend_id || s.audit_backend_id != r.audit_backend_id ||
               s.mapping_id != r.mapping_id || s.timestamp != r.timestamp) {
      throw std::invalid_argument("summarize_jobs: inconsistent metadata in job " + r.job_id);
    }
    if (f.size() != s.vec.size())
      throw std::invalid_argument("summarize_jobs: inconsistent record widths in job " + r.job_id);
    for (std::size_t i = 0; i < f.size(); ++i) s.vec[i] += f[i];
    ++counts[r.job_id];
  }
  std::vector<JobSummary> out;
  out.reserve(jobs.size());
  for (auto& [id, s] : jobs) {  // std::map iterates in ascending job_id
    const double n = static_cast<double>(counts[id]);
    for (double& v : s.vec) v /= n;
    out.push_back(std::move(s));
  }
  return out;
}

inline double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("euclidean: dimension mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

struct PairSample {
  double dt = 0;
  double dist = 0;
  bool same_backend = false;  // by audit identity
};

inline std::vector<PairSample> pairwise_samples(const std::vector<JobSummary>& jobs) {
  std::vector<PairSample> out;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    for (std::size_t j = i + 1; j < jobs.size(); ++j)
      out.push_back({std::abs(jobs[i].timestamp - jobs[j].timestamp),
                     euclidean(jobs[i].vec, jobs[j].vec),
                     jobs[i].audit_backend_id == jobs[j].audit_backend_id});
  return out;
}

struct SeparationStat {
  double overlap = 0;    // misclassification rate of the best threshold
  double threshold = 0;  // same-backend iff dist <= threshold
  double mean_same = 0;
  double mean_diff = 0;
};

// How separable same-backend and cross-backend pair distances are with a
// single cut.
inline SeparationStat separation_stat(const std::vector<PairSample>& pairs) {
  std::vector<double> same, diff;
  for (const auto& p : pairs) (p.same_backend ? same : diff).push_back(p.dist);
  if (same.empty() || diff.empty())
    throw std::invalid_argument("separation_stat: need both same- and cross-backend pairs");
  SeparationStat s;
  for (double d : same) s.mean_same += d;
  s.mean_same /= static_cast<double>(same.size());
  for (double d : diff) s.mean_diff += d;
  s.mean_diff /= static_cast<double>(diff.size());

  std::vector<double> cuts = same;
  cuts.insert(cuts.end(), diff.begin(), diff.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.insert(cuts.begin(), -std::numeric_limits<double>::infinity());
  const double total = static_cast<double>(same.size() + diff.size());
  s.overlap = 1.0;
  for (double t : cuts) {
    std::size_t wrong = 0;
    for (double d : same)
      if (d > t) ++wrong;
    for (double d : diff)
      if (d <= t) ++wrong;
    const double frac = static_cast<double>(wrong) / total;
    if (frac < s.overlap) {
      s.overlap = frac;
      s.threshold = t;
    }
  }
  return s;
}

// Classic density clustering. Neighborhoods are inclusive (dist <= eps)
// and contain the point itself, so a point is core when at least
// min_samples points, itself included, fall within eps. Labels: cluster
// ids from 0 in discovery order, -1 for noise. Deterministic in input
// order; feed it canonically sorted points.
inline std::vector<long> dbscan(const std::vector<std::vector<double>>& pts, double eps,
                                std::size_t min_samples, std::vector<char>* core_out = nullptr) {
  if (eps < 0) throw std::invalid_argument("dbscan: eps must be >= 0");
  if (min_samples == 0) throw std::invalid_argument("dbscan: min_samples must be >= 1");
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (euclidean(pts[i], pts[j]) <= eps) nbrs[i].push_back(j);
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) core[i] = nbrs[i].size() >= min_samples;

  std::vector<long> label(n, -1);
  long next_cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || label[i] != -1) continue;
    const long c = next_cluster++;
    std::vector<std::size_t> queue = {i};
    label[i] = c;
    while (!queue.empty()) {
      const std::size_t u = queue.back();
      queue.pop_back();
      if (!core[u]) continue;  // border points join but do not expand
      for (std::size_t v : nbrs[u]) {
        if (label[v] != -1) continue;
        label[v] = c;
        queue.push_back(v);
      }
    }
  }
  if (core_out) *core_out = core;
  return label;
}

// Adjusted Rand index between two labelings over the same points; any
// equal label values count as "together", including -1. Degenerate case
// (both partitions trivial the same way) scores 1.
inline double adjusted_rand_index(const std::vector<long>& a, const std::vector<long>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("adjusted_rand_index: size mismatch");
  if (a.size() < 2) throw std::invalid_argument("adjusted_rand_index: need at least 2 points");
  std::map<std::pair<long, long>, double> cont;
  std::map<long, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cont[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  const auto choose2 = [](double m) { return m * (m - 1) / 2; };
  double index = 0, sum_a = 0, sum_b = 0;
  for (const auto& [k, v] : cont) index += choose2(v);
  for (const auto& [k, v] : ra) sum_a += choose2(v);
  for (const auto& [k, v] : rb) sum_b += choose2(v);
  const double all = choose2(static_cast<double>(a.size()));
  const double expected = sum_a * sum_b / all;
  const double max_index = (sum_a + sum_b) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

struct ClusterModel {
  double eps = 0;
  std::size_t min_samples = 0;
  std::vector<JobSummary> jobs;  // sorted by job_id
  std::vector<long> labels;
  std::vector<char> core;

  std::size_t n_clusters() const {
    long hi = -1;
    for (long l : labels) hi = std::max(hi, l);
    return static_cast<std::size_t>(hi + 1);
  }
  std::size_t n_noise() const {
    std::size_t k = 0;
    for (long l : labels)
      if (l == -1) ++k;
    return k;
  }
};

inline ClusterModel fit_clusters(const std::vector<JobSummary>& jobs, double eps,
                                 std::size_t min_samples) {
  ClusterModel m;
  m.eps = eps;
  m.min_samples = min_samples;
  m.jobs = jobs;
  std::sort(m.jobs.begin(), m.jobs.end(),
            [](const JobSummary& x, const JobSummary& y) { return x.job_id < y.job_id; });
  std::vector<std::vector<double>> pts;
  pts.reserve(m.jobs.size());
  for (const auto& j : m.jobs) pts.push_back(j.vec);
  m.labels = dbscan(pts, eps, min_samples, &m.core);
  return m;
}

struct Verdict {
  bool consistent = false;  // within eps of some core point
  long cluster = -1;
  double distance = std::numeric_limits<double>::infinity();
  std::string nearest_job;
};

// Compare a new job against the fitted reference structure; nearest core
// point decides, ties going to the lowest job_id (the scan order).
inline Verdict verdict_for(const ClusterModel& m, const std::vector<double>& vec) {
  Verdict v;
  bool any_core = false;
  for (std::size_t i = 0; i < m.jobs.size(); ++i) {
    if (!m.core[i]) continue;
    any_core = true;
    const double d = euclidean(m.jobs[i].vec, vec);
    if (d < v.distance) {
      v.distance = d;
      v.cluster = m.labels[i];
      v.nearest_job = m.jobs[i].job_id;
    }
  }
  if (!any_core) throw std::invalid_argument("verdict_for: reference model has no core points");
  v.consistent = v.distance <= m.eps;
  return v;
}

struct SweepPoint {
  double eps = 0;
  std::size_t min_samples = 0;
  double ari = 0;
  std::size_t n_clusters = 0;
  std::size_t n_noise = 0;
};

// Grid search returning every (eps, min_samples) combination scored by ARI
// against the reference labeling; entries keep grid order, so the best one
// under max_element ties resolves to the earliest combination.
inline std::vector<SweepPoint> sweep_dbscan(const std::vector<JobSummary>& jobs,
                                            const std::vector<long>& truth,
                                            const std::vector<double>& eps_grid,
                                            const std::vector<std::size_t>& min_samples_grid) {
  if (truth.size() != jobs.size()) throw std::invalid_argument("sweep_dbscan: truth size mismatch");
  // keep truth aligned with the canonical job order used by fit_clusters
  std::vector<std::size_t> perm(jobs.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(),
            [&jobs](std::size_t a, std::size_t b) { return jobs[a].job_id < jobs[b].job_id; });
  std::vector<JobSummary> sorted_jobs;
  std::vector<long> sorted_truth;
  for (std::size_t i : perm) {
    sorted_jobs.push_back(jobs[i]);
    sorted_truth.push_back(truth[i]);
  }
  std::vector<SweepPoint> out;
  for (double eps : eps_grid)
    for (std::size_t ms : min_samples_grid) {
      const ClusterModel m = fit_clusters(sorted_jobs, eps, ms);
      SweepPoint p;
      p.eps = eps;
      p.min_samples = ms;
      p.ari = adjusted_rand_index(m.labels, sorted_truth);
      p.n_clusters = m.n_clusters();
      p.n_noise = m.n_noise();
      out.push_back(p);
    }
  return out;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson: need two equally sized series");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (double v : x) mx += v;
  for (double v : y) my += v;
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw std::invalid_argument("pearson: a series is constant");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace qfp
