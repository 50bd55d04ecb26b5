#include "earpipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "earpipe/error.hpp"
#include "earpipe/fft.hpp"

namespace earpipe {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr std::array<std::string_view, 8> kKindNames = {
    "tone", "alpha_burst", "blink", "chew", "motion_burst", "spike_wave_seizure", "white_noise",
    "gait_artifact"};

Source default_source(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::Tone:
    case ComponentKind::AlphaBurst:
    case ComponentKind::SpikeWaveSeizure: return Source::Eeg;
    case ComponentKind::Blink: return Source::Eog;
    case ComponentKind::Chew: return Source::Emg;
    case ComponentKind::MotionBurst:
    case ComponentKind::GaitArtifact: return Source::Motion;
    case ComponentKind::WhiteNoise: return Source::Noise;
  }
  return Source::Noise;
}

struct Interval {
  std::size_t begin;
  std::size_t end;
};

Interval to_samples(const SynthComponent& c, double duration, double rate, std::size_t n) {
  const double stop = c.stop_s < 0 ? duration : c.stop_s;
  const auto b = static_cast<std::size_t>(std::llround(c.start_s * rate));
  const auto e = static_cast<std::size_t>(std::llround(stop * rate));
  return {std::min(b, n), std::min(e, n)};
}

// Raised-cosine ramps of `ramp` samples at both ends of [0, len).
double taper(std::size_t i, std::size_t len, std::size_t ramp) {
  if (ramp == 0 || len == 0) return 1.0;
  ramp = std::min(ramp, len / 2);
  if (ramp == 0) return 1.0;
  const std::size_t from_end = len - 1 - i;
  const std::size_t d = std::min(i, from_end);
  if (d >= ramp) return 1.0;
  return 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(d) / static_cast<double>(ramp));
}

// Unit-RMS Gaussian noise restricted to [lo, hi] Hz.
Signal band_noise(std::size_t n, double rate, double lo, double hi, std::mt19937_64& rng) {
  Signal x(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& v : x) v = gauss(rng);
  if (n < 2) return x;
  auto spec = fft::rfft(x);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = rate * static_cast<double>(k) / static_cast<double>(n);
    if (f < lo || f > hi) spec[k] = 0.0;
  }
  x = fft::irfft(spec, n);
  double ss = 0.0;
  for (double v : x) ss += v * v;
  const double r = std::sqrt(ss / static_cast<double>(n));
  if (r > 0) {
    for (auto& v : x) v /= r;
  }
  return x;
}

struct Rendered {
  Signal shared;                  // waveform scaled by channel gains
  std::vector<Signal> per_channel;  // independent draws (white noise)
  Signal imu_envelope;            // motion bursts, biopotential rate
};

Rendered render(const SynthComponent& c, const SynthesisSpec& spec, std::size_t n,
                std::uint64_t seed) {
  const double fs = spec.sample_rate;
  const auto [b, e] = to_samples(c, spec.duration_s, fs, n);
  const std::size_t len = e > b ? e - b : 0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Rendered out;
  out.shared.assign(n, 0.0);
  const double A = c.amplitude_mv;

  switch (c.kind) {
    case ComponentKind::Tone: {
      const double f = c.freq_hz;
      for (std::size_t i = b; i < e; ++i) {
        out.shared[i] = A * std::sin(kTwoPi * f * static_cast<double>(i) / fs);
      }
      break;
    }
    case ComponentKind::AlphaBurst: {
      const double f = c.freq_hz > 0 ? c.freq_hz : 10.0;
      const double phase = kTwoPi * unit(rng);
      const auto ramp = static_cast<std::size_t>(0.5 * fs);
      for (std::size_t i = b; i < e; ++i) {
        const double t = static_cast<double>(i) / fs;
        out.shared[i] = A * taper(i - b, len, ramp) * std::sin(kTwoPi * f * t + phase);
      }
      break;
    }
    case ComponentKind::Blink: {
      // Blink every 2-6 s; each is a Gaussian deflection with sigma 70 ms.
      const double sigma = 0.07 * fs;
      double t = b + fs * (0.5 + 1.5 * unit(rng));
      while (t < static_cast<double>(e)) {
        const double height = A * (0.8 + 0.4 * unit(rng));
        const auto lo = static_cast<std::ptrdiff_t>(t - 5 * sigma);
        const auto hi = static_cast<std::ptrdiff_t>(t + 5 * sigma);
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, static_cast<std::ptrdiff_t>(b));
             i < std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(e)); ++i) {
          const double d = (static_cast<double>(i) - t) / sigma;
          out.shared[static_cast<std::size_t>(i)] += height * std::exp(-0.5 * d * d);
        }
        t += fs * (2.0 + 4.0 * unit(rng));
      }
      break;
    }
    case ComponentKind::Chew: {
      const double rhythm = c.freq_hz > 0 ? c.freq_hz : 1.5;
      const double lo = c.band_lo_hz > 0 ? c.band_lo_hz : 20.0;
      const double hi = c.band_hi_hz > 0 ? c.band_hi_hz : 100.0;
      const auto carrier = band_noise(len, fs, lo, hi, rng);
      const auto ramp = static_cast<std::size_t>(0.25 * fs);
      for (std::size_t i = 0; i < len; ++i) {
        const double s = std::sin(std::numbers::pi * rhythm * static_cast<double>(i) / fs);
        out.shared[b + i] = A * carrier[i] * s * s * taper(i, len, ramp);
      }
      break;
    }
    case ComponentKind::MotionBurst: {
      const double lo = c.band_lo_hz > 0 ? c.band_lo_hz : 0.5;
      const double hi = c.band_hi_hz > 0 ? c.band_hi_hz : 4.0;
      const auto carrier = band_noise(len, fs, lo, hi, rng);
      const auto ramp = static_cast<std::size_t>(std::min(1.0 * fs, static_cast<double>(len) / 4));
      out.imu_envelope.assign(n, 0.0);
      for (std::size_t i = 0; i < len; ++i) {
        const double env = taper(i, len, ramp);
        out.shared[b + i] = A * carrier[i] * env;
        out.imu_envelope[b + i] = env;
      }
      break;
    }
    case ComponentKind::SpikeWaveSeizure: {
      // Per cycle: a sharp spike (sigma 15 ms) followed by a broad slow wave
      // of opposite polarity (sigma 60 ms). Cycle length jitters by 5%.
      const double f = c.freq_hz > 0 ? c.freq_hz : 3.0;
      const double spike_sigma = 0.015 * fs;
      const double wave_sigma = 0.060 * fs;
      const auto ramp = static_cast<std::size_t>(1.0 * fs);
      Signal wave(len, 0.0);
      double cycle_start = 0.0;
      while (cycle_start < static_cast<double>(len)) {
        const double period = fs / f * (0.95 + 0.1 * unit(rng));
        const double spike_at = cycle_start + 0.1 * period;
        const double wave_at = cycle_start + 0.45 * period;
        const auto lo = static_cast<std::ptrdiff_t>(cycle_start - 5 * wave_sigma);
        const auto hi = static_cast<std::ptrdiff_t>(cycle_start + period + 5 * wave_sigma);
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, 0);
             i < std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(len)); ++i) {
          const double x = static_cast<double>(i);
          const double ds = (x - spike_at) / spike_sigma;
          const double dw = (x - wave_at) / wave_sigma;
          wave[static_cast<std::size_t>(i)] +=
              std::exp(-0.5 * ds * ds) - 0.6 * std::exp(-0.5 * dw * dw);
        }
        cycle_start += period;
      }
      for (std::size_t i = 0; i < len; ++i) out.shared[b + i] = A * wave[i] * taper(i, len, ramp);
      break;
    }
    case ComponentKind::GaitArtifact: {
      // Each step: a sharp electrode transient (sigma 20 ms) and a slower
      // rebound of opposite sign (sigma 70 ms). Step interval jitters by 5%.
      const double f = c.freq_hz > 0 ? c.freq_hz : 2.0;
      const double sharp_sigma = 0.020 * fs;
      const double rebound_sigma = 0.070 * fs;
      const auto ramp = static_cast<std::size_t>(std::min(1.0 * fs, static_cast<double>(len) / 4));
      Signal wave(len, 0.0);
      for (double step = 0.0; step < static_cast<double>(len);) {
        const double period = fs / f * (0.95 + 0.1 * unit(rng));
        const double sharp_at = step + 0.15 * period;
        const double rebound_at = step + 0.5 * period;
        const auto lo = static_cast<std::ptrdiff_t>(step - 5 * rebound_sigma);
        const auto hi = static_cast<std::ptrdiff_t>(step + period + 5 * rebound_sigma);
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, 0);
             i < std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(len)); ++i) {
          const double x = static_cast<double>(i);
          const double ds = (x - sharp_at) / sharp_sigma;
          const double dr = (x - rebound_at) / rebound_sigma;
          wave[static_cast<std::size_t>(i)] += std::exp(-0.5 * ds * ds) - 0.5 * std::exp(-0.5 * dr * dr);
        }
        step += period;
      }
      out.imu_envelope.assign(n, 0.0);
      for (std::size_t i = 0; i < len; ++i) {
        const double env = taper(i, len, ramp);
        out.shared[b + i] = A * wave[i] * env;
        out.imu_envelope[b + i] = env;
      }
      break;
    }
    case ComponentKind::WhiteNoise: {
      const bool banded = c.band_lo_hz > 0 || c.band_hi_hz > 0;
      const double hi = c.band_hi_hz > 0 ? c.band_hi_hz : fs / 2;
      for (std::size_t ch = 0; ch < spec.roles.size(); ++ch) {
        Signal x(n, 0.0);
        Signal draw;
        if (banded) {
          draw = band_noise(len, fs, c.band_lo_hz, hi, rng);
        } else {
          std::normal_distribution<double> gauss(0.0, 1.0);
          draw.resize(len);
          for (auto& v : draw) v = gauss(rng);
        }
        const double g = ch < 2 ? c.channel_gain[ch] : 1.0;
        for (std::size_t i = 0; i < len; ++i) x[b + i] = A * g * draw[i];
        out.per_channel.push_back(std::move(x));
      }
      out.shared.clear();
      break;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(ComponentKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<ComponentKind> parse_component_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<ComponentKind>(i);
  }
  return std::nullopt;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Signal SynthesisResult::truth_of(Source source, std::size_t channel) const {
  if (auto it = truth.find(source); it != truth.end() && channel < it->second.size()) {
    return it->second[channel];
  }
  return Signal(recording.length(), 0.0);
}

void validate(const SynthesisSpec& spec) {
  require(spec.duration_s > 0, "synthesis: duration must be positive");
  require(spec.sample_rate > 0 && spec.imu_rate > 0, "synthesis: rates must be positive");
  require(!spec.roles.empty(), "synthesis: at least one channel role required");
  for (const auto& c : spec.components) {
    const double stop = c.stop_s < 0 ? spec.duration_s : c.stop_s;
    require(c.start_s >= 0 && stop <= spec.duration_s + 1e-9 && c.start_s < stop,
            "synthesis: component interval must lie within the duration");
    require(std::isfinite(c.amplitude_mv), "synthesis: amplitude must be finite");
    if (c.kind == ComponentKind::Tone) require(c.freq_hz > 0, "synthesis: tone needs freq_hz > 0");
    if (c.kind == ComponentKind::SpikeWaveSeizure) {
      require(stop - c.start_s >= kMinEventSeconds,
              "synthesis: seizure components must last at least 10 s");
    }
  }
}

SynthesisResult synthesize(const SynthesisSpec& spec) {
  validate(spec);
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate));
  const auto m = static_cast<std::size_t>(std::llround(spec.duration_s * spec.imu_rate));
  const std::size_t channels = spec.roles.size();

  SynthesisResult out;
  Recording& rec = out.recording;
  rec.patient_id = spec.patient_id;
  rec.sample_rate = spec.sample_rate;
  for (auto role : spec.roles) rec.channels.push_back({role, Signal(n, 0.0)});

  auto bucket = [&](Source s) -> std::vector<Signal>& {
    auto& v = out.truth[s];
    if (v.empty()) v.assign(channels, Signal(n, 0.0));
    return v;
  };

  Signal imu_envelope(n, 0.0);  // accumulated in g at the biopotential rate
  for (std::size_t ci = 0; ci < spec.components.size(); ++ci) {
    const auto& c = spec.components[ci];
    const auto r = render(c, spec, n, derive_seed(spec.rng_seed, ci));
    auto& truth = bucket(c.source.value_or(default_source(c.kind)));
    for (std::size_t ch = 0; ch < channels; ++ch) {
      auto& dst = rec.channels[ch].samples;
      if (!r.per_channel.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
          dst[i] += r.per_channel[ch][i];
          truth[ch][i] += r.per_channel[ch][i];
        }
      } else {
        const double g = ch < 2 ? c.channel_gain[ch] : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
          dst[i] += g * r.shared[i];
          truth[ch][i] += g * r.shared[i];
        }
      }
    }
    if (!r.imu_envelope.empty()) {
      for (std::size_t i = 0; i < n; ++i) imu_envelope[i] += c.imu_gain_g * r.imu_envelope[i];
    }
    if (c.kind == ComponentKind::SpikeWaveSeizure) {
      const double stop = c.stop_s < 0 ? spec.duration_s : c.stop_s;
      rec.annotations.push_back({c.start_s, stop, "synthetic"});
    }
  }
  std::sort(rec.annotations.begin(), rec.annotations.end(),
            [](const auto& a, const auto& b) { return a.onset < b.onset; });

  // IMU: gravity on z plus sensor noise; motion envelopes add to the magnitude.
  rec.imu.sample_rate = spec.imu_rate;
  std::mt19937_64 imu_rng(derive_seed(spec.rng_seed, 0xfeedULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noise = [&](std::mt19937_64& g) { return spec.imu_noise_g > 0 ? spec.imu_noise_g * gauss(g) : 0.0; };
  for (auto& axis : rec.imu.axes) axis.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const double pos = static_cast<double>(j) / spec.imu_rate * spec.sample_rate;
    const auto i = std::min(static_cast<std::size_t>(std::llround(pos)), n ? n - 1 : 0);
    const double env = n ? imu_envelope[i] : 0.0;
    rec.imu.axes[0][j] = noise(imu_rng);
    rec.imu.axes[1][j] = noise(imu_rng);
    rec.imu.axes[2][j] = 1.0 + env + noise(imu_rng);
  }

  validate(rec);
  return out;
}

}  // namespace earpipe
