#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "earpipe/error.hpp"
#include "earpipe/preprocess.hpp"
#include "earpipe/spectral.hpp"

using namespace earpipe;
using std::numbers::pi;

namespace {

constexpr double kFs = 250.0;

Signal tone(double f, double amp, std::size_t n, double phase = 0.0) {
  Signal x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * pi * f * static_cast<double>(i) / kFs + phase);
  return x;
}

// Amplitude at f by direct correlation with sin/cos over whole cycles.
double amplitude_at(std::span<const double> x, double f) {
  std::complex<double> acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i] * std::polar(1.0, -2 * pi * f * static_cast<double>(i) / kFs);
  }
  return 2.0 * std::abs(acc) / static_cast<double>(x.size());
}

std::span<const double> after_first_second(const Signal& x) {
  return std::span(x).subspan(static_cast<std::size_t>(kFs));
}

}  // namespace

TEST_CASE("notch removes the mains tone") {
  const auto x = tone(60, 1.0, 2500);
  const auto y = notch_filter(x, kFs, 60);
  CHECK(dsp::rms(after_first_second(y)) <= 0.01 * dsp::rms(after_first_second(x)));
}

TEST_CASE("notch at 50 Hz for the other mains standard") {
  const auto x = tone(50, 1.0, 2500);
  const auto y = notch_filter(x, kFs, 50);
  CHECK(dsp::rms(after_first_second(y)) <= 0.01 * dsp::rms(after_first_second(x)));
}

TEST_CASE("notch leaves a 10 Hz tone within 11 percent") {
  const auto x = tone(10, 1.0, 2500);
  const auto y = notch_filter(x, kFs, 60);
  const double ratio = dsp::rms(after_first_second(y)) / dsp::rms(after_first_second(x));
  CHECK(ratio == doctest::Approx(1.0).epsilon(0.11));
}

TEST_CASE("notch has unit gain away from the mains frequency") {
  for (double f : {5.0, 30.0, 100.0}) {
    const auto x = tone(f, 1.0, 5000);
    const auto y = notch_filter(x, kFs, 60);
    const auto tail = std::span(y).subspan(2500);
    CHECK(amplitude_at(tail, f) == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("detrend removes a line exactly") {
  Signal x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 3.5 - 0.02 * static_cast<double>(i);
  const auto y = detrend_linear(x);
  for (double v : y) CHECK(std::abs(v) < 1e-9);
  CHECK_THROWS_AS(detrend_linear(Signal{1.0}), Error);
}

TEST_CASE("detrend recovers a sine riding on a ramp") {
  const auto s = tone(10, 1.0, 2500);
  Signal x(s.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = s[i] + 0.5 + 0.001 * static_cast<double>(i);
  const auto y = detrend_linear(x);
  CHECK(dsp::pearson(y, s) > 0.999);
}

TEST_CASE("outlier spike is interpolated away") {
  auto x = tone(10, 0.05, 2500);
  const auto clean = x;
  x[1200] += 50.0;
  const auto r = outlier_clip_detailed(x);
  REQUIRE(r.replaced.size() == 1);
  CHECK(r.replaced[0] == 1200);
  CHECK(std::abs(r.signal[1200] - clean[1200]) <= 0.05 * 0.05);
  CHECK(dsp::rms(r.signal) == doctest::Approx(dsp::rms(clean)).epsilon(0.05));
}

TEST_CASE("outlier clip leaves constant input alone") {
  const Signal x(500, 2.5);
  CHECK(outlier_clip(x) == x);
}

TEST_CASE("outlier clip leaves gaussian noise mostly alone") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Signal x(10000);
  for (auto& v : x) v = g(rng);
  CHECK(outlier_clip_detailed(x).replaced.size() < 3);
}

TEST_CASE("bandpass keeps the passband and drops mains") {
  const auto a = tone(10, 1.0, 2500);
  const auto b = tone(60, 1.0, 2500);
  const auto ya = bandpass(a, kFs, 1, 30);
  const auto yb = bandpass(b, kFs, 1, 30);
  const auto mid = [](const Signal& v) { return std::span(v).subspan(250, 2000); };
  CHECK(dsp::rms(mid(ya)) / dsp::rms(mid(a)) == doctest::Approx(1.0).epsilon(0.11));
  CHECK(dsp::rms(mid(yb)) / dsp::rms(mid(b)) < 0.05);
}

TEST_CASE("bandpass is zero phase") {
  const auto a = tone(10, 1.0, 2500);
  const auto y = bandpass(a, kFs, 1, 30);
  CHECK(dsp::pearson(std::span(y).subspan(500, 1500), std::span(a).subspan(500, 1500)) > 0.999);
}

TEST_CASE("filters are linear") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  Signal x(1000), y(1000), z(1000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = g(rng);
    y[i] = g(rng);
    z[i] = 2.0 * x[i] - 3.0 * y[i];
  }
  const auto check = [&](auto&& f) {
    const auto fx = f(x), fy = f(y), fz = f(z);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(fz[i] - (2.0 * fx[i] - 3.0 * fy[i])) < 1e-9);
  };
  check([](const Signal& s) { return notch_filter(s, kFs, 60); });
  check([](const Signal& s) { return bandpass(s, kFs, 1, 30); });
  check([](const Signal& s) { return detrend_linear(s); });
}

TEST_CASE("impedance from measured voltage") {
  const auto zero = electrode_impedance(21.2132e-6);
  CHECK(zero.z == 0.0);
  CHECK(zero.in_range);
  const auto mid = electrode_impedance(42.4264e-6);
  CHECK(mid.z == doctest::Approx(5000).epsilon(1e-4));
  CHECK(mid.in_range);
  const auto high = electrode_impedance(63.6396e-6);
  CHECK(high.z == doctest::Approx(10000).epsilon(1e-4));
  CHECK_FALSE(high.in_range);
  CHECK_THROWS_AS(electrode_impedance(10e-6), Error);
}

TEST_CASE("preprocess runs every stage and keeps metadata") {
  Recording rec;
  rec.patient_id = "p";
  const auto base = tone(10, 0.05, 5000);
  auto noisy = base;
  const auto mains = tone(60, 0.5, 5000);
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += mains[i] + 0.2;
  rec.channels = {{ChannelRole::MixedLeft, noisy}, {ChannelRole::MixedRight, noisy}};
  rec.annotations = {{2.0, 14.0, "x"}};
  PreprocessConfig cfg;
  cfg.bandpass = std::pair{1.0, 30.0};
  const auto out = preprocess(rec, cfg);
  CHECK(out.annotations == rec.annotations);
  CHECK(out.patient_id == "p");
  const auto& y = out.channel(ChannelRole::MixedLeft);
  CHECK(amplitude_at(std::span(y).subspan(1000, 3000), 60) < 0.005);
  CHECK(dsp::pearson(std::span(y).subspan(1000, 3000), std::span(base).subspan(1000, 3000)) > 0.99);
}

TEST_CASE("preprocess rejects unsupported mains") {
  PreprocessConfig cfg;
  cfg.mains_hz = 55;
  CHECK_THROWS_AS(validate(cfg, kFs), Error);
  cfg.mains_hz = 50;
  cfg.bandpass = std::pair{30.0, 1.0};
  CHECK_THROWS_AS(validate(cfg, kFs), Error);
}
