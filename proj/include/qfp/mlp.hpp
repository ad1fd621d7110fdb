#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfp/features.hpp"
#include "qfp/rng.hpp"

namespace qfp {

struct MlpConfig {
  std::size_t n_inputs = 0;
  std::size_t n_hidden = 128;
  std::size_t n_classes = 0;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  double plateau_tol = 1e-4;    // minimum loss improvement that counts
  std::size_t patience = 10;    // epochs without improvement before stopping

  void validate() const {
    if (n_inputs == 0 || n_hidden == 0 || n_classes < 2)
      throw std::invalid_argument("MlpConfig: need inputs, hidden units, and >= 2 classes");
    if (learning_rate <= 0) throw std::invalid_argument("MlpConfig: learning rate must be > 0");
    if (batch_size == 0 || max_epochs == 0)
      throw std::invalid_argument("MlpConfig: batch size and epochs must be >= 1");
  }
};

struct TrainReport {
  std::size_t epochs_run = 0;
  double final_loss = 0;
};

// One hidden layer of relu units into a softmax readout, trained by
// mini-batch gradient descent on class-weighted cross-entropy. Parameters
// live in one flat vector laid out W1 | b1 | W2 | b2 (rows = units).
class Mlp {
 public:
  Mlp(const MlpConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    params_.assign(n_params(), 0.0);
    const double s1 = std::sqrt(2.0 / static_cast<double>(cfg_.n_inputs));
    const double s2 = std::sqrt(2.0 / static_cast<double>(cfg_.n_hidden));
    for (std::size_t i = 0; i < cfg_.n_hidden * cfg_.n_inputs; ++i)
      params_[w1_off() + i] = s1 * rng.normal();
    for (std::size_t i = 0; i < cfg_.n_classes * cfg_.n_hidden; ++i)
      params_[w2_off() + i] = s2 * rng.normal();
  }

  const MlpConfig& config() const { return cfg_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& mutable_params() { return params_; }

  std::size_t n_params() const {
    return cfg_.n_hidden * cfg_.n_inputs + cfg_.n_hidden + cfg_.n_classes * cfg_.n_hidden +
           cfg_.n_classes;
  }

  std::vector<double> probs(const std::vector<double>& x) const {
    std::vector<double> hidden, logits;
    forward(params_, x, hidden, logits);
    softmax_inplace(logits);
    return logits;
  }

  // Ties resolve to the lowest class index.
  std::size_t predict(const std::vector<double>& x) const {
    std::vector<double> hidden, logits;
    forward(params_, x, hidden, logits);
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c)
      if (logits[c] > logits[best]) best = c;
    return best;
  }

  // Weighted-mean cross-entropy over the given rows, evaluated at an
  // arbitrary parameter vector; fills the gradient when asked. Exposed so
  // the gradient can be checked against finite differences.
  double loss_and_grad(const std::vector<double>& params, const Dataset& data,
                       const std::vector<std::size_t>& rows,
                       const std::vector<double>& class_weights,
                       std::vector<double>* grad) const {
    if (params.size() != n_params()) throw std::invalid_argument("Mlp: parameter size mismatch");
    if (class_weights.size() != cfg_.n_classes)
      throw std::invalid_argument("Mlp: class weight count mismatch");
    if (rows.empty()) throw std::invalid_argument("Mlp: empty batch");
    if (grad) grad->assign(n_params(), 0.0);

    double weight_sum = 0;
    for (std::size_t r : rows) weight_sum += class_weights[data.y[r]];
    if (weight_sum <= 0) throw std::invalid_argument("Mlp: zero total class weight");

    double loss = 0;
    std::vector<double> hidden, logits;
    for (std::size_t r : rows) {
      const std::vector<double>& x = data.x[r];
      const std::size_t label = data.y[r];
      const double w = class_weights[label] / weight_sum;
      forward(params, x, hidden, logits);
      const double lse = log_sum_exp(logits);
      loss += w * (lse - logits[label]);
      if (!grad) continue;
      // d loss / d logit_c = w * (softmax_c - [c == label])
      for (std::size_t c = 0; c < cfg_.n_classes; ++c) {
        const double d = w * (std::exp(logits[c] - lse) - (c == label ? 1.0 : 0.0));
        (*grad)[b2_off() + c] += d;
        for (std::size_t j = 0; j < cfg_.n_hidden; ++j)
          (*grad)[w2_off() + c * cfg_.n_hidden + j] += d * hidden[j];
      }
      for (std::size_t j = 0; j < cfg_.n_hidden; ++j) {
        if (hidden[j] <= 0) continue;  // relu gate
        double dh = 0;
        for (std::size_t c = 0; c < cfg_.n_classes; ++c) {
          const double d = w * (std::exp(logits[c] - lse) - (c == data.y[r] ? 1.0 : 0.0));
          dh += d * params[w2_off() + c * cfg_.n_hidden + j];
        }
        (*grad)[b1_off() + j] += dh;
        for (std::size_t i = 0; i < cfg_.n_inputs; ++i)
          (*grad)[w1_off() + j * cfg_.n_inputs + i] += dh * x[i];
      }
    }
    return loss;
  }

  TrainReport train(const Dataset& data, const std::vector<double>& class_weights, Rng& rng) {
    if (data.size() == 0) throw std::invalid_argument("Mlp::train: empty dataset");
    if (data.n_features != cfg_.n_inputs)
      throw std::invalid_argument("Mlp::train: feature width mismatch");
    for (std::size_t label : data.y)
      if (label >= cfg_.n_classes) throw std::invalid_argument("Mlp::train: label out of range");

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<std::size_t> all = order;

    std::vector<double> grad;
    TrainReport report;
    double best = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    for (std::size_t epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
        const std::size_t stop = std::min(order.size(), start + cfg_.batch_size);
        const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                             order.begin() + static_cast<std::ptrdiff_t>(stop));
        loss_and_grad(params_, data, batch, class_weights, &grad);
        for (std::size_t i = 0; i < params_.size(); ++i)
          params_[i] -= cfg_.learning_rate * grad[i];
      }
      report.epochs_run = epoch + 1;
      report.final_loss = loss_and_grad(params_, data, all, class_weights, nullptr);
      if (report.final_loss < best - cfg_.plateau_tol) {
        best = report.final_loss;
        stale = 0;
      } else if (++stale >= cfg_.patience) {
        break;
      }
    }
    return report;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["n_inputs"] = cfg_.n_inputs;
    j["n_hidden"] = cfg_.n_hidden;
    j["n_classes"] = cfg_.n_classes;
    j["learning_rate"] = cfg_.learning_rate;
    j["batch_size"] = cfg_.batch_size;
    j["max_epochs"] = cfg_.max_epochs;
    j["plateau_tol"] = cfg_.plateau_tol;
    j["patience"] = cfg_.patience;
    j["params"] = params_;
    return j;
  }

  static Mlp from_json(const nlohmann::json& j) {
    MlpConfig cfg;
    cfg.n_inputs = j.at("n_inputs").get<std::size_t>();
    cfg.n_hidden = j.at("n_hidden").get<std::size_t>();
    cfg.n_classes = j.at("n_classes").get<std::size_t>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.max_epochs = j.at("max_epochs").get<std::size_t>();
    cfg.plateau_tol = j.at("plateau_tol").get<double>();
    cfg.patience = j.at("patience").get<std::size_t>();
    Rng rng(0);
    Mlp m(cfg, rng);
    m.params_ = j.at("params").get<std::vector<double>>();
    if (m.params_.size() != m.n_params())
      throw std::invalid_argument("Mlp::from_json: parameter count mismatch");
    return m;
  }

 private:
  std::size_t w1_off() const { return 0; }
  std::size_t b1_off() const { return cfg_.n_hidden * cfg_.n_inputs; }
  std::size_t w2_off() const { return b1_off() + cfg_.n_hidden; }
  std::size_t b2_off() const { return w2_off() + cfg_.n_classes * cfg_.n_hidden; }

  void forward(const std::vector<double>& params, const std::vector<double>& x,
               std::vector<double>& hidden, std::vector<double>& logits) const {
    if (x.size() != cfg_.n_inputs) throw std::invalid_argument("Mlp: input width mismatch");
    hidden.assign(cfg_.n_hidden, 0.0);
    for (std::size_t j = 0; j < cfg_.n_hidden; ++j) {
      double a = params[b1_off() + j];
      const double* w = &params[w1_off() + j * cfg_.n_inputs];
      for (std::size_t i = 0; i < cfg_.n_inputs; ++i) a += w[i] * x[i];
      hidden[j] = a > 0 ? a : 0.0;
    }
    logits.assign(cfg_.n_classes, 0.0);
    for (std::size_t c = 0; c < cfg_.n_classes; ++c) {
      double a = params[b2_off() + c];
      const double* w = &params[w2_off() + c * cfg_.n_hidden];
      for (std::size_t j = 0; j < cfg_.n_hidden; ++j) a += w[j] * hidden[j];
      logits[c] = a;
    }
  }

  static double log_sum_exp(const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    double s = 0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
  }

  static void softmax_inplace(std::vector<double>& v) {
    const double lse = log_sum_exp(v);
    for (double& x : v) x = std::exp(x - lse);
  }

  MlpConfig cfg_;
  std::vector<double> params_;
};

}  // namespace qfp
