#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qfp/eval.hpp"
#include "qfp/features.hpp"
#include "qfp/mlp.hpp"
#include "qfp/rng.hpp"

namespace {

qfp::SyndromeRecord make_record(const std::string& job, const std::string& backend,
                                const std::string& syndrome, const std::string& data = "") {
  qfp::SyndromeRecord r;
  r.job_id = job;
  r.backend_id = backend;
  r.audit_backend_id = backend;
  r.mapping_id = "trivial";
  r.syndrome = syndrome;
  r.data_bits = data;
  return r;
}

// Identity-wired network: one-hot input row -> that class, deterministically.
qfp::Mlp identity_model(std::size_t n) {
  qfp::MlpConfig cfg;
  cfg.n_inputs = cfg.n_hidden = cfg.n_classes = n;
  qfp::Rng rng(0);
  qfp::Mlp m(cfg, rng);
  auto& p = m.mutable_params();
  std::fill(p.begin(), p.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    p[i * n + i] = 1.0;                    // W1 identity
    p[n * n + n + i * n + i] = 1.0;        // W2 identity
  }
  return m;
}

std::vector<double> one_hot(std::size_t n, std::size_t i) {
  std::vector<double> v(n, 0.0);
  v[i] = 1.0;
  return v;
}

// Two Gaussian blobs per class along distinct axes.
qfp::Dataset gaussian_blobs(std::size_t n_classes, std::size_t per_class, double spread,
                            double sigma, std::uint64_t seed) {
  qfp::Dataset d;
  d.n_features = n_classes;
  qfp::Rng rng(seed);
  for (std::size_t c = 0; c < n_classes; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> x(n_classes, 0.0);
      for (std::size_t f = 0; f < n_classes; ++f)
        x[f] = (f == c ? spread : 0.0) + sigma * rng.normal();
      d.x.push_back(std::move(x));
      d.y.push_back(c);
      d.job_ids.push_back("job");
    }
  return d;
}

}  // namespace

TEST_CASE("label spec sorts its vocabulary and rejects strangers", "[supervised]") {
  std::vector<qfp::SyndromeRecord> records = {make_record("j0", "backend_02", "00"),
                                              make_record("j1", "backend_00", "01"),
                                              make_record("j2", "backend_01", "10"),
                                              make_record("j3", "backend_00", "11")};
  const auto spec = qfp::LabelSpec::from_records(records, qfp::label_by_backend);
  REQUIRE(spec.classes == std::vector<std::string>{"backend_00", "backend_01", "backend_02"});
  REQUIRE(spec.index_of("backend_01") == 1);
  REQUIRE_THROWS_AS(spec.index_of("backend_09"), std::invalid_argument);
}

TEST_CASE("single-shot features mirror the logged bits", "[supervised]") {
  std::vector<qfp::SyndromeRecord> records = {make_record("j0", "a", "101", "1"),
                                              make_record("j1", "b", "010", "0")};
  const auto spec = qfp::LabelSpec::from_records(records, qfp::label_by_backend);

  const qfp::Dataset plain = qfp::featurize(records, qfp::label_by_backend, spec);
  REQUIRE(plain.n_features == 3);
  REQUIRE(plain.x[0] == std::vector<double>{1, 0, 1});
  REQUIRE(plain.x[1] == std::vector<double>{0, 1, 0});
  REQUIRE(plain.y == std::vector<std::size_t>{0, 1});
  REQUIRE(plain.job_ids == std::vector<std::string>{"j0", "j1"});

  qfp::FeatureOptions with_data;
  with_data.include_data_bits = true;
  const qfp::Dataset wide = qfp::featurize(records, qfp::label_by_backend, spec, with_data);
  REQUIRE(wide.n_features == 4);
  REQUIRE(wide.x[0] == std::vector<double>{1, 0, 1, 1});

  records[1].data_bits.clear();
  REQUIRE_THROWS_AS(qfp::featurize(records, qfp::label_by_backend, spec, with_data),
                    std::invalid_argument);
  records[1].data_bits = "0";
  records[1].syndrome = "0100";  // width clash
  REQUIRE_THROWS_AS(qfp::featurize(records, qfp::label_by_backend, spec),
                    std::invalid_argument);
}

TEST_CASE("mean-over-k groups within jobs and drops remainders", "[supervised]") {
  std::vector<qfp::SyndromeRecord> records;
  records.push_back(make_record("jA", "a", "10"));
  records.push_back(make_record("jA", "a", "11"));
  records.push_back(make_record("jA", "a", "01"));  // odd one out, dropped at k=2
  records.push_back(make_record("jB", "b", "00"));
  records.push_back(make_record("jB", "b", "01"));
  const auto spec = qfp::LabelSpec::from_records(records, qfp::label_by_backend);

  qfp::FeatureOptions opts;
  opts.mode = qfp::FeatureMode::MeanOverK;
  opts.k = 2;
  const qfp::Dataset d = qfp::featurize(records, qfp::label_by_backend, spec, opts);
  REQUIRE(d.size() == 2);
  REQUIRE(d.x[0] == std::vector<double>{1.0, 0.5});
  REQUIRE(d.x[1] == std::vector<double>{0.0, 0.5});
  REQUIRE(d.y == std::vector<std::size_t>{0, 1});
  REQUIRE(d.job_ids == std::vector<std::string>{"jA", "jB"});

  // 85 shots in one job at k=40: two groups out, five shots dropped
  std::vector<qfp::SyndromeRecord> long_job;
  for (std::size_t i = 0; i < 85; ++i) long_job.push_back(make_record("j", "a", i % 2 ? "1" : "0"));
  const auto spec2 = qfp::LabelSpec::from_records(long_job, qfp::label_by_backend);
  opts.k = 40;
  const qfp::Dataset grouped = qfp::featurize(long_job, qfp::label_by_backend, spec2, opts);
  REQUIRE(grouped.size() == 2);
  REQUIRE(grouped.x[0] == std::vector<double>{0.5});
  REQUIRE(grouped.x[1] == std::vector<double>{0.5});

  // a job shorter than k contributes nothing
  opts.k = 100;
  REQUIRE(qfp::featurize(long_job, qfp::label_by_backend, spec2, opts).size() == 0);
  opts.k = 0;
  REQUIRE_THROWS_AS(qfp::featurize(long_job, qfp::label_by_backend, spec2, opts),
                    std::invalid_argument);
}

TEST_CASE("analytic gradient matches central differences", "[supervised][oracle]") {
  qfp::MlpConfig cfg;
  cfg.n_inputs = 4;
  cfg.n_hidden = 6;
  cfg.n_classes = 3;
  qfp::Rng rng(2024);
  qfp::Mlp m(cfg, rng);

  qfp::Dataset d;
  d.n_features = 4;
  for (std::size_t i = 0; i < 12; ++i) {
    std::vector<double> x(4);
    for (double& v : x) v = 2.0 * rng.next_double() - 1.0;
    d.x.push_back(std::move(x));
    d.y.push_back(rng.next_below(3));
    d.job_ids.push_back("j");
  }
  std::vector<std::size_t> rows(d.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const std::vector<double> weights = {1.0, 1.7, 0.4};

  std::vector<double> grad;
  m.loss_and_grad(m.params(), d, rows, weights, &grad);
  REQUIRE(grad.size() == m.n_params());

  std::vector<double> p = m.params();
  const double h = 1e-5;
  double worst = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = m.loss_and_grad(p, d, rows, weights, nullptr);
    p[i] = keep - h;
    const double dn = m.loss_and_grad(p, d, rows, weights, nullptr);
    p[i] = keep;
    const double fd = (up - dn) / (2.0 * h);
    const double rel = std::abs(fd - grad[i]) / std::max(1e-6, std::abs(fd) + std::abs(grad[i]));
    worst = std::max(worst, rel);
  }
  REQUIRE(worst < 1e-4);
}

TEST_CASE("training separates well-separated clusters", "[supervised]") {
  qfp::MlpConfig cfg;
  cfg.n_inputs = 4;
  cfg.n_hidden = 16;
  cfg.n_classes = 4;
  cfg.max_epochs = 80;
  const qfp::Dataset train = gaussian_blobs(4, 60, 2.0, 0.3, 11);
  const qfp::Dataset test = gaussian_blobs(4, 40, 2.0, 0.3, 12);

  qfp::Rng init(5);
  qfp::Mlp m(cfg, init);
  qfp::Rng tr(6);
  const qfp::TrainReport report = m.train(train, std::vector<double>(4, 1.0), tr);
  REQUIRE(report.epochs_run >= 1);
  REQUIRE(qfp::accuracy_of(m, train) >= 0.99);
  REQUIRE(qfp::accuracy_of(m, test) >= 0.99);

  // training is deterministic under fixed seeds
  qfp::Rng init2(5);
  qfp::Mlp m2(cfg, init2);
  qfp::Rng tr2(6);
  m2.train(train, std::vector<double>(4, 1.0), tr2);
  REQUIRE(m.params() == m2.params());
}

TEST_CASE("model json round trip preserves every weight", "[supervised][serialization]") {
  qfp::MlpConfig cfg;
  cfg.n_inputs = 3;
  cfg.n_hidden = 5;
  cfg.n_classes = 2;
  qfp::Rng rng(77);
  qfp::Mlp m(cfg, rng);
  const std::string text = m.to_json().dump();
  const qfp::Mlp back = qfp::Mlp::from_json(nlohmann::json::parse(text));
  REQUIRE(back.params() == m.params());
  REQUIRE(back.to_json().dump() == text);
}

TEST_CASE("evaluation metrics match a hand confusion table", "[supervised][oracle]") {
  const qfp::Mlp m = identity_model(2);
  qfp::Dataset d;
  d.n_features = 2;
  // class 0: predictions 0,0,1 ; class 1: predictions 1,1
  d.x = {one_hot(2, 0), one_hot(2, 0), one_hot(2, 1), one_hot(2, 1), one_hot(2, 1)};
  d.y = {0, 0, 0, 1, 1};
  d.job_ids.assign(5, "j");
  const qfp::EvalMetrics e = qfp::evaluate(m, d, 2);
  REQUIRE_THAT(e.accuracy, Catch::Matchers::WithinAbs(0.8, 1e-12));
  REQUIRE(e.per_class[0].support == 3);
  REQUIRE_THAT(e.per_class[0].fnr, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
  REQUIRE_THAT(e.per_class[0].fpr, Catch::Matchers::WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(e.per_class[1].fnr, Catch::Matchers::WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(e.per_class[1].fpr, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
  REQUIRE_THAT(e.macro_fnr, Catch::Matchers::WithinAbs(1.0 / 6.0, 1e-12));
  REQUIRE_THAT(e.macro_fpr, Catch::Matchers::WithinAbs(1.0 / 6.0, 1e-12));
}

TEST_CASE("mode vote resolves ties to the lowest class", "[supervised]") {
  REQUIRE(qfp::mode_class({2, 2, 1}, 3) == 2);
  REQUIRE(qfp::mode_class({1, 2, 2, 1}, 3) == 1);
  REQUIRE(qfp::mode_class({0}, 3) == 0);
  REQUIRE_THROWS_AS(qfp::mode_class({}, 3), std::invalid_argument);
  REQUIRE_THROWS_AS(qfp::mode_class({5}, 3), std::invalid_argument);
}

TEST_CASE("majority vote rescues a weak per-shot classifier", "[supervised][oracle]") {
  // per-shot accuracy 0.30 over five classes, errors spread evenly: the
  // 500-shot mode is nearly always right.
  qfp::Rng rng(314);
  const std::size_t trials = 300;
  std::size_t correct = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::size_t> preds;
    for (std::size_t s = 0; s < 500; ++s) {
      if (rng.bernoulli(0.30))
        preds.push_back(0);
      else
        preds.push_back(1 + rng.next_below(4));
    }
    if (qfp::mode_class(preds, 5) == 0) ++correct;
  }
  REQUIRE(static_cast<double>(correct) / trials >= 0.99);
}

TEST_CASE("accuracy versus shots follows the sampled pool", "[supervised]") {
  // 3 classes, 40 one-hot rows each; 12 per class deliberately mislabelled
  // features (6 to each other class) so per-shot accuracy is exactly 0.7.
  const std::size_t n_classes = 3;
  qfp::Dataset d;
  d.n_features = n_classes;
  qfp::LabelSpec labels;
  labels.classes = {"c0", "c1", "c2"};
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < 28; ++i) {
      d.x.push_back(one_hot(n_classes, c));
      d.y.push_back(c);
    }
    for (std::size_t i = 0; i < 12; ++i) {
      d.x.push_back(one_hot(n_classes, (c + 1 + i % 2) % n_classes));
      d.y.push_back(c);
    }
  }
  d.job_ids.assign(d.size(), "j");
  const qfp::Mlp m = identity_model(n_classes);

  qfp::Rng rng(99);
  const auto curve = qfp::accuracy_vs_shots(m, d, labels, {1, 15}, 400, rng);
  REQUIRE(curve.size() == 2 * (n_classes + 1));
  for (const auto& p : curve) {
    if (p.n_shots == 1 && p.label != "mean")
      REQUIRE_THAT(p.accuracy, Catch::Matchers::WithinAbs(0.7, 0.08));
    if (p.n_shots == 15) REQUIRE(p.accuracy >= 0.95);
  }
  // the mean row is the exact average of its class rows
  double sum = 0;
  for (const auto& p : curve)
    if (p.n_shots == 1) {
      if (p.label == "mean")
        REQUIRE_THAT(p.accuracy, Catch::Matchers::WithinAbs(sum / n_classes, 1e-12));
      else
        sum += p.accuracy;
    }

  // determinism under the same stream
  qfp::Rng rng2(99);
  const auto curve2 = qfp::accuracy_vs_shots(m, d, labels, {1, 15}, 400, rng2);
  for (std::size_t i = 0; i < curve.size(); ++i)
    REQUIRE(curve[i].accuracy == curve2[i].accuracy);

  // requests beyond the pool are refused, not silently resampled
  qfp::Rng rng3(1);
  REQUIRE_THROWS_AS(qfp::accuracy_vs_shots(m, d, labels, {41}, 10, rng3), std::invalid_argument);
  REQUIRE_THROWS_AS(qfp::accuracy_vs_shots(m, d, labels, {0}, 10, rng3), std::invalid_argument);

  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "qfp_test_curve.csv";
  qfp::write_curve_csv(path.string(), curve);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "n_shots,class,accuracy");
  std::size_t body = 0;
  while (std::getline(in, line)) ++body;
  REQUIRE(body == curve.size());
  fs::remove(path);
}

TEST_CASE("class weight calibration lifts a lagging minority", "[supervised]") {
  // 12:1 imbalance with overlapping blobs: the minority class recall lags
  // until its weight is boosted.
  qfp::MlpConfig cfg;
  cfg.n_inputs = 2;
  cfg.n_hidden = 8;
  cfg.n_classes = 2;
  cfg.max_epochs = 40;
  qfp::Rng rng(21);
  qfp::Dataset train;
  train.n_features = 2;
  const auto add = [&](qfp::Dataset& d, std::size_t cls, std::size_t count, double mean) {
    for (std::size_t i = 0; i < count; ++i) {
      d.x.push_back({mean + rng.normal(), mean + rng.normal()});
      d.y.push_back(cls);
      d.job_ids.push_back("j");
    }
  };
  add(train, 0, 25, 0.0);
  add(train, 1, 300, 1.2);
  qfp::Dataset val;
  val.n_features = 2;
  add(val, 0, 120, 0.0);
  add(val, 1, 120, 1.2);

  qfp::Rng base_rng(33);
  const auto baseline = qfp::train_with_calibration(cfg, train, val, base_rng, 0.10, 1.5, 0);
  qfp::Rng cal_rng(33);
  const auto calibrated = qfp::train_with_calibration(cfg, train, val, cal_rng, 0.10, 1.5, 5);

  REQUIRE(baseline.rounds == 0);
  REQUIRE(baseline.class_weights == std::vector<double>{1.0, 1.0});
  REQUIRE(calibrated.rounds >= 1);
  REQUIRE(calibrated.class_weights[0] > 1.0);
  REQUIRE(calibrated.val_recalls[0] > baseline.val_recalls[0]);
}

TEST_CASE("label shuffling collapses accuracy to chance", "[supervised]") {
  qfp::MlpConfig cfg;
  cfg.n_inputs = 4;
  cfg.n_hidden = 16;
  cfg.n_classes = 4;
  cfg.max_epochs = 40;
  const qfp::Dataset train = gaussian_blobs(4, 60, 2.0, 0.3, 51);
  const qfp::Dataset test = gaussian_blobs(4, 60, 2.0, 0.3, 52);
  qfp::Rng rng(7);
  const double acc = qfp::shuffled_label_accuracy(cfg, train, test, rng);
  REQUIRE_THAT(acc, Catch::Matchers::WithinAbs(0.25, 0.12));
}
