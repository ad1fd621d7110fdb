#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfp/features.hpp"
#include "qfp/mlp.hpp"
#include "qfp/rng.hpp"

namespace qfp {

// Majority vote over per-shot predictions; ties go to the lowest index.
inline std::size_t mode_class(const std::vector<std::size_t>& preds, std::size_t n_classes) {
  if (preds.empty()) throw std::invalid_argument("mode_class: no predictions");
  std::vector<std::size_t> counts(n_classes, 0);
  for (std::size_t p : preds) {
    if (p >= n_classes) throw std::invalid_argument("mode_class: prediction out of range");
    ++counts[p];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < n_classes; ++c)
    if (counts[c] > counts[best]) best = c;
  return best;
}

inline std::vector<std::size_t> predict_all(const Mlp& m, const Dataset& d) {
  std::vector<std::size_t> out;
  out.reserve(d.size());
  for (const auto& x : d.x) out.push_back(m.predict(x));
  return out;
}

inline double accuracy_of(const Mlp& m, const Dataset& d) {
  if (d.size() == 0) throw std::invalid_argument("accuracy_of: empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (m.predict(d.x[i]) == d.y[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(d.size());
}

struct ClassMetrics {
  std::size_t support = 0;
  double recall = 0;  // 1 - fnr
  double fpr = 0;
  double fnr = 0;
};

struct EvalMetrics {
  double accuracy = 0;
  double macro_fpr = 0;  // one-vs-rest, averaged over classes with support
  double macro_fnr = 0;
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

inline EvalMetrics evaluate(const Mlp& m, const Dataset& d, std::size_t n_classes) {
  if (d.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  std::vector<std::vector<std::size_t>> conf(n_classes, std::vector<std::size_t>(n_classes, 0));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::size_t pred = m.predict(d.x[i]);
    ++conf[d.y[i]][pred];
    if (pred == d.y[i]) ++hits;
  }
  EvalMetrics out;
  out.accuracy = static_cast<double>(hits) / static_cast<double>(d.size());
  out.confusion = conf;
  out.per_class.resize(n_classes);
  std::size_t supported = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t tp = conf[c][c], fn = 0, fp = 0;
    for (std::size_t k = 0; k < n_classes; ++k) {
      if (k == c) continue;
      fn += conf[c][k];
      fp += conf[k][c];
    }
    const std::size_t tn = d.size() - tp - fn - fp;
    ClassMetrics& cm = out.per_class[c];
    cm.support = tp + fn;
    cm.fpr = (fp + tn) ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0;
    if (cm.support) {
      cm.fnr = static_cast<double>(fn) / static_cast<double>(cm.support);
      cm.recall = 1.0 - cm.fnr;
      out.macro_fpr += cm.fpr;
      out.macro_fnr += cm.fnr;
      ++supported;
    }
  }
  if (supported == 0) throw std::invalid_argument("evaluate: no class has support");
  out.macro_fpr /= static_cast<double>(supported);
  out.macro_fnr /= static_cast<double>(supported);
  return out;
}

struct ShotCurvePoint {
  std::size_t n_shots = 0;
  std::string label;  // class name, or "mean" for the per-n average
  double accuracy = 0;
};

// Majority-vote accuracy as a function of shots per decision. For each n
// and each class, `trials` random n-subsets of that class's single-shot
// rows are drawn without replacement and classified by mode vote.
inline std::vector<ShotCurvePoint> accuracy_vs_shots(const Mlp& m, const Dataset& shots,
                                                     const LabelSpec& labels,
                                                     const std::vector<std::size_t>& grid,
                                                     std::size_t trials, Rng& rng) {
  if (trials == 0) throw std::invalid_argument("accuracy_vs_shots: trials must be >= 1");
  const std::size_t n_classes = labels.n_classes();
  const std::vector<std::size_t> preds = predict_all(m, shots);
  std::vector<std::vector<std::size_t>> pool(n_classes);
  for (std::size_t i = 0; i < shots.size(); ++i) pool[shots.y[i]].push_back(i);
  for (std::size_t c = 0; c < n_classes; ++c)
    if (pool[c].empty())
      throw std::invalid_argument("accuracy_vs_shots: class " + labels.classes[c] + " has no rows");

  std::vector<ShotCurvePoint> out;
  std::vector<std::size_t> votes;
  for (std::size_t n : grid) {
    if (n == 0) throw std::invalid_argument("accuracy_vs_shots: zero shots requested");
    double mean_acc = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      std::vector<std::size_t>& rows = pool[c];
      if (n > rows.size())
        throw std::invalid_argument("accuracy_vs_shots: class " + labels.classes[c] +
                                    " has only " + std::to_string(rows.size()) +
                                    " rows, cannot draw " + std::to_string(n));
      std::size_t correct = 0;
      for (std::size_t t = 0; t < trials; ++t) {
        // partial Fisher-Yates: the first n entries become the sample
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t j = i + rng.next_below(rows.size() - i);
          std::swap(rows[i], rows[j]);
        }
        votes.clear();
        for (std::size_t i = 0; i < n; ++i) votes.push_back(preds[rows[i]]);
        if (mode_class(votes, n_classes) == c) ++correct;
      }
      const double acc = static_cast<double>(correct) / static_cast<double>(trials);
      out.push_back({n, labels.classes[c], acc});
      mean_acc += acc;
    }
    out.push_back({n, "mean", mean_acc / static_cast<double>(n_classes)});
  }
  return out;
}

inline void write_curve_csv(const std::string& path, const std::vector<ShotCurvePoint>& points) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_curve_csv: cannot open " + path);
  out << "n_shots,class,accuracy\n";
  char buf[32];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.6f", p.accuracy);
    out << p.n_shots << ',' << p.label << ',' << buf << '\n';
  }
  if (!out) throw std::runtime_error("write_curve_csv: write failed for " + path);
}

struct CalibrationResult {
  Mlp model;
  std::vector<double> class_weights;
  std::size_t rounds = 0;  // retraining passes beyond the first fit
  std::vector<double> val_recalls;
};

// Fit, then boost class weights and refit, at most `max_rounds` times. A
// class whose recall fails to lead its confusion row by `margin_floor`
// loses its own plurality and can never win a majority vote, however many
// shots are pooled, so those classes are boosted first (and alone, to
// shift the decision boundary in their favour rather than everyone's);
// with no margin violations, any class whose recall lags the mean by more
// than `lag` is boosted. Returns the round with the best worst-case
// margin, not necessarily the last.
inline CalibrationResult train_with_calibration(const MlpConfig& cfg, const Dataset& train,
                                                const Dataset& val, Rng& rng, double lag = 0.10,
                                                double boost = 1.5, std::size_t max_rounds = 5,
                                                double margin_floor = 0.05) {
  std::vector<double> weights(cfg.n_classes, 1.0);
  std::optional<CalibrationResult> best;
  double best_margin = 0, best_accuracy = 0;
  for (std::size_t round = 0;; ++round) {
    Rng init_rng = rng.derive(0x1e17, round);
    Rng train_rng = rng.derive(0x7ea1, round);
    Mlp model(cfg, init_rng);
    model.train(train, weights, train_rng);

    const EvalMetrics metrics = evaluate(model, val, cfg.n_classes);
    std::vector<double> recalls(cfg.n_classes, 0);
    double mean_recall = 0, min_margin = 1;
    std::size_t supported = 0;
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
      recalls[c] = metrics.per_class[c].recall;
      if (metrics.per_class[c].support) {
        mean_recall += recalls[c];
        ++supported;
      }
    }
    mean_recall /= static_cast<double>(supported);

    std::vector<std::size_t> low_margin, low_recall;
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
      if (!metrics.per_class[c].support) continue;
      double worst_rival = 0;
      for (std::size_t k = 0; k < cfg.n_classes; ++k)
        if (k != c)
          worst_rival = std::max(worst_rival, static_cast<double>(metrics.confusion[c][k]) /
                                                  static_cast<double>(metrics.per_class[c].support));
      const double margin = recalls[c] - worst_rival;
      min_margin = std::min(min_margin, margin);
      if (margin < margin_floor)
        low_margin.push_back(c);
      else if (recalls[c] + lag < mean_recall)
        low_recall.push_back(c);
    }

    if (!best || min_margin > best_margin ||
        (min_margin == best_margin && metrics.accuracy > best_accuracy)) {
      best = CalibrationResult{std::move(model), weights, round, recalls};
      best_margin = min_margin;
      best_accuracy = metrics.accuracy;
    }
    const std::vector<std::size_t>& lagging = low_margin.empty() ? low_recall : low_margin;
    if (lagging.empty() || round >= max_rounds) return std::move(*best);
    for (std::size_t c : lagging) weights[c] *= boost;
  }
}

// Chance-level control: train on label-shuffled data, score on untouched
// labels. A leak-free pipeline lands near 1/n_classes.
inline double shuffled_label_accuracy(const MlpConfig& cfg, const Dataset& train,
                                      const Dataset& test, Rng& rng) {
  Dataset shuffled = train;
  rng.shuffle(shuffled.y);
  Rng init_rng = rng.derive(0x5411);
  Rng train_rng = rng.derive(0x5412);
  Mlp model(cfg, init_rng);
  const std::vector<double> weights(cfg.n_classes, 1.0);
  model.train(shuffled, weights, train_rng);
  return accuracy_of(model, test);
}

}  // namespace qfp
