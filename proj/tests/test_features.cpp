#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>

#include "earpipe/error.hpp"
#include "earpipe/features.hpp"
#include "earpipe/normalize.hpp"
#include "earpipe/segment.hpp"

using namespace earpipe;
using std::numbers::pi;

namespace {

constexpr double kFs = 250.0;

Signal noise(std::uint64_t seed, std::size_t n, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, scale);
  Signal x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

Recording separated_recording(double duration_s, std::vector<SeizureAnnotation> annotations) {
  Recording rec;
  rec.patient_id = "P";
  const auto n = static_cast<std::size_t>(duration_s * kFs);
  std::uint64_t seed = 1;
  for (auto role : kSeparatedRoles) rec.channels.push_back({role, noise(seed++, n, 0.05)});
  rec.annotations = std::move(annotations);
  return rec;
}

// MFCCs with a direct DFT instead of the FFT path.
std::vector<double> mfcc_oracle(const Signal& w, const MfccConfig& cfg) {
  const std::size_t len = w.size() / cfg.frames;
  const auto fb = mel_filterbank(len, kFs, cfg);
  std::vector<double> out;
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    Eigen::VectorXd power(static_cast<Eigen::Index>(len / 2 + 1));
    for (std::size_t k = 0; k <= len / 2; ++k) {
      std::complex<double> acc = 0;
      for (std::size_t i = 0; i < len; ++i) {
        const double hann = 0.5 - 0.5 * std::cos(2 * pi * static_cast<double>(i) / static_cast<double>(len));
        acc += w[f * len + i] * hann * std::polar(1.0, -2 * pi * static_cast<double>(k * i) / static_cast<double>(len));
      }
      power(static_cast<Eigen::Index>(k)) = std::norm(acc);
    }
    const Eigen::VectorXd e = fb * power;
    const double m = static_cast<double>(cfg.filters);
    for (std::size_t c = 0; c < cfg.coeffs; ++c) {
      double acc = 0;
      for (std::size_t j = 0; j < cfg.filters; ++j) {
        acc += std::log(std::max(e(static_cast<Eigen::Index>(j)), cfg.log_floor)) *
               std::cos(pi * static_cast<double>(c) * (static_cast<double>(j) + 0.5) / m);
      }
      out.push_back(acc * std::sqrt((c == 0 ? 1.0 : 2.0) / m));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("feature vector layout") {
  CHECK(kFeatureCount == 348);
  const auto& names = feature_names();
  CHECK(names.size() == 348);
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == 348);
}

TEST_CASE("time statistics against direct formulas") {
  const auto x = noise(3, 2500);
  const double n = static_cast<double>(x.size());
  double mean = 0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0, m3 = 0, m4 = 0, mad = 0, sq = 0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    mad += std::abs(d);
    sq += v * v;
  }
  m2 /= n, m3 /= n, m4 /= n, mad /= n;
  const auto t = time_features(x);
  CHECK(t[0] == doctest::Approx(mean).epsilon(1e-12));
  CHECK(t[1] == doctest::Approx(std::sqrt(m2)).epsilon(1e-12));
  CHECK(t[2] == doctest::Approx(mad).epsilon(1e-12));
  CHECK(t[3] == doctest::Approx(m3 / std::pow(m2, 1.5)).epsilon(1e-9));
  CHECK(t[4] == doctest::Approx(m4 / (m2 * m2)).epsilon(1e-9));
  CHECK(t[5] == *std::min_element(x.begin(), x.end()));
  CHECK(t[6] == *std::max_element(x.begin(), x.end()));
  CHECK(t[7] == doctest::Approx(std::sqrt(sq / n)).epsilon(1e-12));
}

TEST_CASE("constant window has zero shape statistics") {
  const Signal x(2500, 1.5);
  const auto t = time_features(x);
  CHECK(t[1] == 0.0);
  CHECK(t[3] == 0.0);
  CHECK(t[4] == 0.0);
  CHECK(t[7] == doctest::Approx(1.5));
}

TEST_CASE("mfcc matches a direct-DFT computation") {
  const auto x = noise(4, 2500);
  const MfccConfig cfg;
  const auto got = mfcc_features(x, kFs, cfg);
  const auto want = mfcc_oracle(x, cfg);
  REQUIRE(got.size() == 50);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9));
}

TEST_CASE("scaling the signal only shifts the zeroth cepstral coefficient") {
  const auto x = noise(5, 2500);
  Signal y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 3.0 * x[i];
  const auto a = mfcc_features(x, kFs), b = mfcc_features(y, kFs);
  for (std::size_t f = 0; f < kMfccFrames; ++f) {
    CHECK(b[f * 10] - a[f * 10] == doctest::Approx(std::log(9.0) * std::sqrt(26.0)).epsilon(1e-9));
    for (std::size_t c = 1; c < 10; ++c) CHECK(b[f * 10 + c] == doctest::Approx(a[f * 10 + c]).epsilon(1e-9));
  }
}

TEST_CASE("mel filterbank shape") {
  const MfccConfig cfg;
  const auto fb = mel_filterbank(500, kFs, cfg);
  CHECK(fb.rows() == 26);
  CHECK(fb.cols() == 251);
  CHECK(fb.minCoeff() >= 0.0);
  for (Eigen::Index j = 0; j < fb.rows(); ++j) CHECK(fb.row(j).maxCoeff() > 0.0);
}

TEST_CASE("mfcc rejects windows that are not 10 s") {
  CHECK_THROWS_AS(mfcc_features(Signal(2400, 0.0), kFs), Error);
}

TEST_CASE("window count matches enumeration for every stride") {
  for (int stride = 1; stride <= 9; ++stride) {
    for (double dur : {9.0, 10.0, 10.5, 37.0, 120.0, 600.0}) {
      const auto n = static_cast<std::size_t>(dur * kFs);
      std::size_t enumerated = 0;
      for (std::size_t s = 0; s + 2500 <= n; s += static_cast<std::size_t>(stride) * 250) ++enumerated;
      CHECK(window_count(n, kFs, {10.0, stride}) == enumerated);
      if (dur >= 10) CHECK(enumerated == static_cast<std::size_t>(std::floor((dur - 10) / stride)) + 1);
    }
  }
}

TEST_CASE("labeling agrees with a brute-force containment check") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 300);
  std::uniform_int_distribution<int> count(0, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<SeizureAnnotation> ann;
    const int k = count(rng);
    for (int i = 0; i < k; ++i) {
      const double on = u(rng);
      ann.push_back({on, on + 10 + u(rng) / 5, "s"});
    }
    const double start = std::floor(u(rng));
    bool inside = false;
    for (const auto& a : ann) inside |= (a.onset <= start && start + 10 <= a.offset);
    CHECK(label_window(start, start + 10, ann) == (inside ? EpochLabel::Seizure : EpochLabel::NonSeizure));
  }
}

TEST_CASE("segments carry labels and channel order") {
  const auto rec = separated_recording(60, {{20.0, 40.0, "s"}});
  const auto epochs = segment(rec, {10.0, 1});
  REQUIRE(epochs.size() == 51);
  for (const auto& e : epochs) {
    const bool inside = e.start_s >= 20 && e.start_s + 10 <= 40;
    CHECK((e.label == EpochLabel::Seizure) == inside);
    CHECK(e.channels[2].size() == 2500);
  }
  CHECK(epochs[7].channels[3][0] == rec.channel(ChannelRole::EmgRight)[7 * 250]);
  CHECK_THROWS_AS(segment(Recording{}, {}), Error);
}

TEST_CASE("balancing keeps the requested ratio") {
  std::vector<EpochLabel> labels(100, EpochLabel::NonSeizure);
  for (int i = 10; i < 30; ++i) labels[static_cast<std::size_t>(i)] = EpochLabel::Seizure;
  for (int k = 1; k <= 3; ++k) {
    const auto idx = balance_indices(labels, {k, 7});
    std::size_t sz = 0;
    for (auto i : idx) sz += labels[i] == EpochLabel::Seizure;
    CHECK(sz == 20);
    CHECK(idx.size() - sz == static_cast<std::size_t>(20 * k));
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(balance_indices(labels, {k, 7}) == idx);
  }
  // Seizures outnumber: non-seizures limit the ratio.
  std::vector<EpochLabel> many(50, EpochLabel::Seizure);
  many[0] = many[1] = many[2] = EpochLabel::NonSeizure;
  CHECK(balance_indices(many, {1, 0}).size() == 6);
  CHECK(balance_indices(many, {2, 0}).size() == 3);
}

TEST_CASE("ratio strings") {
  CHECK(parse_ratio("1:3").non_seizure_per_seizure == 3);
  CHECK(ratio_string(parse_ratio("1:2")) == "1:2");
  CHECK_THROWS_AS(parse_ratio("2:1"), Error);
  CHECK_THROWS_AS(parse_ratio("1:0"), Error);
  CHECK_THROWS_AS(parse_ratio("abc"), Error);
}

TEST_CASE("feature extraction covers every window") {
  const auto rec = separated_recording(40, {{5.0, 25.0, "s"}});
  const auto table = extract_features(rec, {10.0, 3});
  CHECK(table.size() == window_count(rec.length(), kFs, {10.0, 3}));
  CHECK(table.X.cols() == 348);
  CHECK(table.patient_ids.front() == "P");
  CHECK(table.labels[1] == EpochLabel::NonSeizure);
  CHECK(table.labels[2] == EpochLabel::Seizure);
  CHECK(table.start_s[2] == 6.0);
  CHECK(table.X.allFinite());
}

TEST_CASE("feature csv round trip") {
  const auto rec = separated_recording(20, {});
  const auto table = extract_features(rec, {10.0, 5});
  const auto path = std::filesystem::temp_directory_path() / "earpipe_test_features.csv";
  write_feature_csv(table, path);
  const auto back = read_feature_csv(path);
  CHECK(back.X == table.X);
  CHECK(back.labels == table.labels);
  CHECK(back.patient_ids == table.patient_ids);
  CHECK(back.start_s == table.start_s);
}

TEST_CASE("normalizers") {
  Eigen::MatrixXd X(4, 3);
  X << 1, 5, 2,
       2, 5, 4,
       3, 5, 6,
       4, 5, 8;
  SUBCASE("z-score") {
    const auto p = fit_normalizer(X, NormalizationKind::ZScore);
    const auto Z = apply_normalizer(p, X);
    CHECK(Z.col(0).mean() == doctest::Approx(0.0));
    CHECK(std::sqrt(Z.col(0).squaredNorm() / 4) == doctest::Approx(1.0));
    CHECK(p.passthrough[1]);
    CHECK(Z.col(1) == X.col(1));
  }
  SUBCASE("min-max") {
    const auto p = fit_normalizer(X, NormalizationKind::MinMax);
    const auto Z = apply_normalizer(p, X);
    CHECK(Z(0, 2) == 0.0);
    CHECK(Z(3, 2) == 1.0);
    CHECK(Z(1, 0) == doctest::Approx(1.0 / 3));
  }
  SUBCASE("hash tracks the fitted numbers") {
    const auto a = fit_normalizer(X);
    Eigen::MatrixXd Y = X;
    Y(0, 0) = 0.5;
    CHECK(params_hash(a) == params_hash(fit_normalizer(X)));
    CHECK(params_hash(a) != params_hash(fit_normalizer(Y)));
  }
  CHECK_THROWS_AS(fit_normalizer(Eigen::MatrixXd(0, 3)), Error);
  CHECK(parse_normalization("minmax") == NormalizationKind::MinMax);
}
