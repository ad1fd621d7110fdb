#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfp/farm.hpp"

namespace qfp {

// SingleShot: one feature row per logged shot. MeanOverK: consecutive
// groups of k shots within the same job are averaged element-wise into one
// row; incomplete trailing groups are dropped.
enum class FeatureMode { SingleShot, MeanOverK };

struct FeatureOptions {
  FeatureMode mode = FeatureMode::SingleShot;
  std::size_t k = 1;
  bool include_data_bits = false;
};

using LabelFn = std::function<std::string(const SyndromeRecord&)>;

inline std::string label_by_backend(const SyndromeRecord& r) { return r.backend_id; }
inline std::string label_by_audit_backend(const SyndromeRecord& r) { return r.audit_backend_id; }
inline std::string label_by_backend_mapping(const SyndromeRecord& r) {
  return r.backend_id + "/" + r.mapping_id;
}

// Class vocabulary with a fixed sorted order, so indices are stable across
// runs regardless of record order.
struct LabelSpec {
  std::vector<std::string> classes;

  static LabelSpec from_records(const std::vector<SyndromeRecord>& records, const LabelFn& fn) {
    LabelSpec s;
    for (const auto& r : records) s.classes.push_back(fn(r));
    std::sort(s.classes.begin(), s.classes.end());
    s.classes.erase(std::unique(s.classes.begin(), s.classes.end()), s.classes.end());
    return s;
  }

  std::size_t n_classes() const { return classes.size(); }

  std::size_t index_of(const std::string& label) const {
    const auto it = std::lower_bound(classes.begin(), classes.end(), label);
    if (it == classes.end() || *it != label)
      throw std::invalid_argument("LabelSpec: unknown class " + label);
    return static_cast<std::size_t>(it - classes.begin());
  }
};

struct Dataset {
  std::size_t n_features = 0;
  std::vector<std::vector<double>> x;
  std::vector<std::size_t> y;
  std::vector<std::string> job_ids;  // provenance, parallel to rows

  std::size_t size() const { return x.size(); }
};

namespace detail {

inline std::vector<double> record_features(const SyndromeRecord& r, bool include_data_bits) {
  std::vector<double> f;
  f.reserve(r.syndrome.size() + (include_data_bits ? r.data_bits.size() : 0));
  for (char c : r.syndrome) f.push_back(c == '1' ? 1.0 : 0.0);
  if (include_data_bits) {
    if (r.data_bits.empty())
      throw std::invalid_argument("featurize: record lacks data bits but they were requested");
    for (char c : r.data_bits) f.push_back(c == '1' ? 1.0 : 0.0);
  }
  return f;
}

}  // namespace detail

inline Dataset featurize(const std::vector<SyndromeRecord>& records, const LabelFn& label_fn,
                         const LabelSpec& labels, const FeatureOptions& opts = {}) {
  if (opts.mode == FeatureMode::MeanOverK && opts.k == 0)
    throw std::invalid_argument("featurize: k must be >= 1");
  Dataset d;
  if (records.empty()) return d;

  if (opts.mode == FeatureMode::SingleShot) {
    for (const auto& r : records) {
      std::vector<double> f = detail::record_features(r, opts.include_data_bits);
      if (d.n_features == 0) d.n_features = f.size();
      if (f.size() != d.n_features)
        throw std::invalid_argument("featurize: inconsistent record widths");
      d.x.push_back(std::move(f));
      d.y.push_back(labels.index_of(label_fn(r)));
      d.job_ids.push_back(r.job_id);
    }
    return d;
  }

  // MeanOverK: jobs in order of first appearance, shots in record order.
  std::vector<std::string> job_order;
  std::map<std::string, std::vector<const SyndromeRecord*>> by_job;
  for (const auto& r : records) {
    auto [it, fresh] = by_job.try_emplace(r.job_id);
    if (fresh) job_order.push_back(r.job_id);
    it->second.push_back(&r);
  }
  for (const auto& job_id : job_order) {
    const auto& shots = by_job[job_id];
    for (std::size_t g = 0; g + opts.k <= shots.size(); g += opts.k) {
      std::vector<double> sum;
      for (std::size_t i = 0; i < opts.k; ++i) {
        std::vector<double> f = detail::record_features(*shots[g + i], opts.include_data_bits);
        if (sum.empty())
          sum.assign(f.size(), 0.0);
        else if (f.size() != sum.size())
          throw std::invalid_argument("featurize: inconsistent record widths");
        for (std::size_t j = 0; j < f.size(); ++j) sum[j] += f[j];
      }
      for (double& v : sum) v /= static_cast<double>(opts.k);
      if (d.n_features == 0) d.n_features = sum.size();
      if (sum.size() != d.n_features)
        throw std::invalid_argument("featurize: inconsistent record widths");
      d.x.push_back(std::move(sum));
      d.y.push_back(labels.index_of(label_fn(*shots[g])));
      d.job_ids.push_back(job_id);
    }
  }
  return d;
}

}  // namespace qfp
