#include "earpipe/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "earpipe/error.hpp"

namespace earpipe {
namespace {

constexpr std::uint64_t kTemplateStream = 10'000;

SynthesisSpec layout(const CorpusConfig& cfg, const std::string& name, std::uint64_t stream) {
  const double D = cfg.duration_s;
  const double s = D / 300.0;  // positions below are given for a 300 s recording
  std::mt19937_64 rng(derive_seed(cfg.seed, stream));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SynthesisSpec spec;
  spec.patient_id = name;
  spec.duration_s = D;
  spec.sample_rate = cfg.sample_rate;
  spec.imu_rate = cfg.imu_rate;
  spec.rng_seed = derive_seed(cfg.seed, stream + 1);

  const double scale = between(0.85, 1.15);
  const std::array<double, 2> gains = {1.0, between(0.9, 1.1)};
  auto add = [&](ComponentKind kind, double amp, double start, double stop) -> SynthComponent& {
    SynthComponent c;
    c.kind = kind;
    c.amplitude_mv = amp;
    c.start_s = start;
    c.stop_s = stop;
    c.channel_gain = gains;
    spec.components.push_back(c);
    return spec.components.back();
  };

  auto& bg = add(ComponentKind::WhiteNoise, cfg.background_mv * scale, 0.0, -1.0);
  bg.band_lo_hz = 1.0;
  bg.band_hi_hz = 30.0;
  bg.source = Source::Eeg;
  add(ComponentKind::WhiteNoise, 0.1 * cfg.background_mv, 0.0, -1.0);
  if (cfg.mains_mv > 0) {
    auto& mains = add(ComponentKind::Tone, cfg.mains_mv, 0.0, -1.0);
    mains.freq_hz = cfg.mains_hz;
    mains.source = Source::Noise;
  }
  add(ComponentKind::Blink, cfg.blink_amplitude_mv * scale, 0.0, -1.0);

  for (int k = 0; k < 4; ++k) {
    const double len = between(5.0, 10.0) * std::max(s, 0.5);
    const double start = between(0.0, std::max(0.0, D - len));
    auto& a = add(ComponentKind::AlphaBurst, cfg.alpha_amplitude_mv * scale, start, std::min(D, start + len));
    a.freq_hz = between(9.0, 11.0);
  }
  for (int k = 0; k < 2; ++k) {
    const double len = between(10.0, 15.0) * s;
    const double start = between(0.0, std::max(0.0, D - len));
    add(ComponentKind::Chew, cfg.chew_amplitude_mv * scale, start, std::min(D, start + len));
  }

  struct Busy {
    ComponentKind kind;
    double start;
    double stop;
  };
  std::vector<Busy> busy;
  auto seizure = [&](double lo, double hi) {
    const double start = between(lo, hi) * s;
    const double len = std::max(kMinEventSeconds, between(30.0, 45.0) * s);
    auto& c = add(ComponentKind::SpikeWaveSeizure, cfg.seizure_amplitude_mv * scale * between(0.9, 1.1),
                  start, std::min(D, start + len));
    c.freq_hz = between(2.7, 3.3);
    busy.push_back({ComponentKind::SpikeWaveSeizure, start, start + len});
  };
  seizure(20.0, 40.0);
  seizure(175.0, 185.0);

  // Daily-activity motion (walking steps), at least one denoising block
  // away from any seizure and clear of other motion.
  constexpr double kClearance = 31.0;
  constexpr double kGap = 2.0;
  for (int k = 0, tries = 0; k < cfg.motion_bursts && tries < 1000; ++tries) {
    const double len = between(8.0, 12.0);
    const double start = between(0.0, D - len);
    const bool clash = std::any_of(busy.begin(), busy.end(), [&](const auto& b) {
      const double margin = b.kind == ComponentKind::SpikeWaveSeizure ? kClearance : kGap;
      return start < b.stop + margin && b.start < start + len + margin;
    });
    if (clash) continue;
    auto& c = add(ComponentKind::GaitArtifact, cfg.motion_amplitude_mv * scale, start, start + len);
    c.freq_hz = between(cfg.step_rate_hz[0], cfg.step_rate_hz[1]);
    c.imu_gain_g = 0.5;
    busy.push_back({ComponentKind::GaitArtifact, start, start + len});
    ++k;
  }
  return spec;
}

}  // namespace

void validate(const CorpusConfig& cfg) {
  require(cfg.n_patients >= 1, "corpus: n_patients must be >= 1");
  require(cfg.duration_s >= 100.0, "corpus: recordings must last at least 100 s");
  require(cfg.sample_rate > 0 && cfg.imu_rate > 0, "corpus: rates must be positive");
  require(cfg.motion_bursts >= 0, "corpus: motion_bursts must be >= 0");
}

std::string patient_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "P%02d", index + 1);
  return buf;
}

SynthesisSpec patient_spec(const CorpusConfig& cfg, int index) {
  validate(cfg);
  require(index >= 0 && index < cfg.n_patients, "corpus: patient index out of range");
  return layout(cfg, patient_name(index), 2 * static_cast<std::uint64_t>(index));
}

SynthesisSpec template_spec(const CorpusConfig& cfg) {
  validate(cfg);
  return layout(cfg, "template", kTemplateStream);
}

ModalitySources template_sources(const CorpusConfig& cfg) {
  const auto res = synthesize(template_spec(cfg));
  ModalitySources out;
  const std::pair<Modality, Source> map[] = {
      {Modality::Eeg, Source::Eeg}, {Modality::Eog, Source::Eog}, {Modality::Emg, Source::Emg}};
  for (const auto& [m, src] : map) {
    for (std::size_t ch = 0; ch < res.recording.channels.size(); ++ch) {
      out[m].push_back(res.truth_of(src, ch));
    }
  }
  return out;
}

}  // namespace earpipe
