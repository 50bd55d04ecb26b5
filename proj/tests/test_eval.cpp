#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "earpipe/error.hpp"
#include "earpipe/experiment.hpp"
#include "earpipe/metrics.hpp"
#include "earpipe/snr.hpp"

using namespace earpipe;
using std::numbers::pi;

namespace {

constexpr double kFs = 250.0;

Signal white(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  Signal x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

Signal tone(double f, std::size_t n) {
  Signal x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2 * pi * f * static_cast<double>(i) / kFs);
  return x;
}

// Features where seizure rows sit at +1 and the rest at -1 on column 0.
FeatureTable toy_table(const std::vector<std::pair<std::string, int>>& patients_and_seizures, int rows_each) {
  FeatureTable t;
  t.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(patients_and_seizures.size()) * rows_each, kFeatureCount);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 0.1);
  Eigen::Index r = 0;
  for (const auto& [pid, seizures] : patients_and_seizures) {
    for (int i = 0; i < rows_each; ++i, ++r) {
      const bool sz = i < seizures;
      for (Eigen::Index c = 0; c < t.X.cols(); ++c) t.X(r, c) = g(rng);
      t.X(r, 0) += sz ? 1.0 : -1.0;
      t.labels.push_back(sz ? EpochLabel::Seizure : EpochLabel::NonSeizure);
      t.patient_ids.push_back(pid);
      t.start_s.push_back(i);
    }
  }
  return t;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.corpus.n_patients = 3;
  cfg.corpus.duration_s = 120;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("metrics from a hand-counted confusion matrix") {
  const auto m = compute_metrics({.tp = 93, .fp = 3, .tn = 97, .fn = 7});
  CHECK(m.seizure_rate == doctest::Approx(0.93));
  CHECK(m.non_seizure_rate == doctest::Approx(0.97));
  CHECK(m.accuracy == doctest::Approx(0.95));
  CHECK(m.seizure.precision == doctest::Approx(93.0 / 96));
}

TEST_CASE("constant non-seizure predictor on balanced data") {
  std::vector<EpochLabel> truth(50, EpochLabel::Seizure);
  truth.resize(100, EpochLabel::NonSeizure);
  const std::vector<EpochLabel> pred(100, EpochLabel::NonSeizure);
  const auto m = compute_metrics(confusion(truth, pred));
  CHECK(m.accuracy == 0.5);
  CHECK(m.seizure_rate == 0.0);
  CHECK(m.seizure.f1 == 0.0);
}

TEST_CASE("metric identities on random confusion matrices") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<long> u(1, 500);
  for (int i = 0; i < 200; ++i) {
    const Confusion cm{.tp = u(rng), .fp = u(rng), .tn = u(rng), .fn = u(rng)};
    const auto m = compute_metrics(cm);
    const double n = static_cast<double>(cm.total());
    CHECK(m.accuracy == doctest::Approx((cm.tp + cm.tn) / n));
    CHECK(m.seizure.recall == doctest::Approx(m.seizure_rate));
    CHECK(m.non_seizure.recall == doctest::Approx(m.non_seizure_rate));
    const double p = m.seizure.precision, r = m.seizure.recall;
    CHECK(m.seizure.f1 == doctest::Approx(2 * p * r / (p + r)));
    CHECK(m.seizure.f1 == doctest::Approx(2.0 * cm.tp / (2.0 * cm.tp + cm.fp + cm.fn)));
  }
}

TEST_CASE("snr of white noise, in-band and out-of-band tones") {
  CHECK(std::abs(snr_db(white(3, 250 * 60), kFs, 8, 12)) <= 0.5);
  Signal in_band = white(4, 250 * 60), out_band = white(5, 250 * 60);
  const auto t10 = tone(10, in_band.size()), t60 = tone(60, in_band.size());
  for (std::size_t i = 0; i < in_band.size(); ++i) {
    in_band[i] = 10 * t10[i] + 0.01 * in_band[i];
    out_band[i] = 10 * t60[i] + 0.01 * out_band[i];
  }
  CHECK(snr_db(in_band, kFs, 8, 12) >= 30);
  CHECK(snr_db(out_band, kFs, 8, 12) <= -20);
  CHECK(snr_db(tone(60, 2500), kFs, 8, 12) <= -20);
}

TEST_CASE("snr comparison") {
  const auto x = white(6, 250 * 30);
  const std::vector<Band> bands = {band(BandName::Alpha), band(BandName::Eeg)};
  const auto same = compare_snr(x, x, kFs, bands);
  for (double d : same.delta_db) CHECK(d == 0.0);

  Signal noisy = x;
  const auto hf = tone(70, x.size());
  for (std::size_t i = 0; i < x.size(); ++i) noisy[i] += 3 * hf[i];
  const auto worse = compare_snr(x, noisy, kFs, {band(BandName::Alpha)});
  CHECK(worse.delta_db[0] < 0);

  CHECK_THROWS_AS(compare_snr(x, Signal(10, 0.0), kFs, bands), Error);
  const auto report = snr_report(x, kFs, 8, 12);
  CHECK(report.epoch_db.size() == 3);
}

TEST_CASE("leave-one-patient-out plan") {
  const auto plan = lopo_plan({"P03", "P01", "P02", "P01"});
  REQUIRE(plan.folds.size() == 3);
  CHECK(plan.folds[0].test_patient == "P01");
  std::set<std::string> tested;
  for (const auto& f : plan.folds) {
    tested.insert(f.test_patient);
    CHECK(f.train_patients.size() == 2);
    for (const auto& p : f.train_patients) CHECK(p != f.test_patient);
  }
  CHECK(tested.size() == 3);
  CHECK_THROWS_AS(lopo_plan({"P01"}), Error);
}

TEST_CASE("a patient without seizures forms a flagged fold") {
  const auto table = toy_table({{"A", 10}, {"B", 10}, {"C", 0}}, 40);
  ExperimentConfig cfg;
  const auto r = evaluate_lopo(table, cfg);
  REQUIRE(r.folds.size() == 3);
  CHECK_FALSE(r.folds[0].specificity_only);
  CHECK(r.folds[2].specificity_only);
  CHECK(r.folds[2].patient == "C");
  double mean = 0;
  for (const auto& f : r.folds) mean += f.metrics.accuracy;
  CHECK(r.summary.macro_accuracy == doctest::Approx(mean / 3).epsilon(1e-12));
  Confusion pooled;
  for (const auto& f : r.folds) pooled += f.metrics.cm;
  CHECK(r.summary.micro.cm == pooled);
  // Held-out epochs are never balanced.
  CHECK(r.folds[0].n_test == 40);
}

TEST_CASE("normalizer ignores the held-out patient") {
  auto table = toy_table({{"A", 10}, {"B", 10}, {"C", 10}}, 30);
  const auto plan = lopo_plan({"A", "B", "C"});
  for (auto kind : {NormalizationKind::ZScore, NormalizationKind::MinMax}) {
    for (const auto& fold : plan.folds) {
      const auto before = params_hash(fold_normalizer(table, fold, kind));
      auto perturbed = table;
      std::mt19937_64 rng(3);
      std::normal_distribution<double> g(0, 100);
      for (auto r : rows_of(perturbed, {fold.test_patient})) {
        for (Eigen::Index c = 0; c < perturbed.X.cols(); ++c) perturbed.X(static_cast<Eigen::Index>(r), c) += g(rng);
      }
      CHECK(params_hash(fold_normalizer(perturbed, fold, kind)) == before);
    }
  }
}

TEST_CASE("configuration json round trip and unknown keys") {
  auto cfg = small_config();
  cfg.stride_s = 4;
  cfg.ratio = 2;
  cfg.model = models::ModelKind::Rfc;
  const auto j = to_json(cfg);
  const auto back = experiment_from_json(j);
  CHECK(to_json(back) == j);
  auto bad = j;
  bad["stirde_s"] = 3;
  CHECK_THROWS_AS(experiment_from_json(bad), Error);
  CHECK_THROWS_AS(experiment_from_json({{"svm", {{"gama", 1}}}}), Error);
}

TEST_CASE("sweeps on a small corpus") {
  auto cfg = small_config();
  SUBCASE("stride axis has nine rows") {
    const auto rows = sweep(cfg, SweepAxis::Stride);
    REQUIRE(rows.size() == 9);
    CHECK(rows[0].value == "1");
    CHECK(rows[8].value == "9");
    const auto csv = sweep_csv(SweepAxis::Stride, rows);
    CHECK(csv.rfind("stride,accuracy,f1,seizure_recall\n", 0) == 0);
  }
  SUBCASE("ratio axis has three rows") {
    const auto rows = sweep(cfg, SweepAxis::Ratio);
    REQUIRE(rows.size() == 3);
    CHECK(rows[2].value == "1:3");
  }
  CHECK_THROWS_AS(parse_sweep_axis("window"), Error);
}

TEST_CASE("experiments are reproducible") {
  const auto cfg = small_config();
  const auto a = to_json(run_experiment(cfg));
  const auto b = to_json(run_experiment(cfg));
  CHECK(a.dump() == b.dump());
  CHECK(a.at("provenance").at("seed") == 11);
  CHECK(a.at("provenance").at("config").at("seed") == 11);
}

TEST_CASE("nnmf separates eeg more cleanly than emd") {
  auto cfg = small_config();
  cfg.corpus.n_patients = 4;
  const auto tpl = experiment_templates(cfg);
  double nnmf_db = 0, emd_db = 0;
  for (int p = 0; p < cfg.corpus.n_patients; ++p) {
    const auto synth = synthesize(patient_spec(resolve_seeds(cfg).corpus, p));
    auto pipeline = cfg.pipeline;
    pipeline.motion_removal = false;
    const auto with_nnmf = run_front_end(synth.recording, pipeline, &tpl);
    pipeline.separation = SeparationMethod::Emd;
    const auto with_emd = run_front_end(synth.recording, pipeline, nullptr);
    const auto eeg = band(BandName::Eeg);
    for (auto role : {ChannelRole::EegLeft, ChannelRole::EegRight}) {
      nnmf_db += snr_db(with_nnmf.channel(role), kFs, eeg.lo_hz, eeg.hi_hz);
      emd_db += snr_db(with_emd.channel(role), kFs, eeg.lo_hz, eeg.hi_hz);
    }
  }
  MESSAGE("EEG-band SNR, NNMF ", nnmf_db / 8, " dB vs EMD ", emd_db / 8, " dB");
  CHECK(nnmf_db > emd_db);
}
