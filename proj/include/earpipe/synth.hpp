#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "earpipe/recording.hpp"

namespace earpipe {

enum class ComponentKind {
  Tone,              // A sin(2 pi f t), phase 0
  AlphaBurst,        // tapered sinusoid at f (default 10 Hz), random phase
  Blink,             // Gaussian eye-blink deflections at irregular intervals
  Chew,              // band-limited muscle noise gated by a chewing rhythm
  MotionBurst,       // low-frequency electrode artifact + matching IMU envelope
  SpikeWaveSeizure,  // rhythmic spike-and-slow-wave discharge, annotated
  WhiteNoise,        // Gaussian noise, optionally band-limited
  GaitArtifact,      // rhythmic step transients (default 2 Hz) + matching IMU envelope
};

std::string_view to_string(ComponentKind kind);
std::optional<ComponentKind> parse_component_kind(std::string_view name);

// Where a component's energy is booked in the ground truth.
enum class Source { Eeg, Eog, Emg, Motion, Noise };

struct SynthComponent {
  ComponentKind kind = ComponentKind::Tone;
  double amplitude_mv = 0.0;
  double freq_hz = 0.0;  // 0 selects the kind's default
  double band_lo_hz = 0.0;
  double band_hi_hz = 0.0;  // 0 selects the kind's default band
  double start_s = 0.0;
  double stop_s = -1.0;  // negative: until the end of the recording
  std::array<double, 2> channel_gain = {1.0, 1.0};
  double imu_gain_g = 0.5;  // motion bursts only
  std::optional<Source> source;  // overrides the kind's default bucket
};

struct SynthesisSpec {
  std::string patient_id = "synthetic";
  double duration_s = 10.0;
  double sample_rate = kDefaultSampleRate;
  double imu_rate = kDefaultImuRate;
  std::vector<ChannelRole> roles = {ChannelRole::MixedLeft, ChannelRole::MixedRight};
  std::vector<SynthComponent> components;
  std::uint64_t rng_seed = 0;
  double imu_noise_g = 0.005;
};

struct SynthesisResult {
  Recording recording;
  // Per source, per channel (same order as recording.channels).
  std::map<Source, std::vector<Signal>> truth;

  Signal truth_of(Source source, std::size_t channel) const;  // zeros when absent
};

void validate(const SynthesisSpec& spec);

SynthesisResult synthesize(const SynthesisSpec& spec);

inline Recording synthesize_recording(const SynthesisSpec& spec) {
  return synthesize(spec).recording;
}

// Deterministic 64-bit stream derivation (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace earpipe
