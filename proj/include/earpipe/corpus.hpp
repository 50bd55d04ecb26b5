#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "earpipe/nnmf.hpp"
#include "earpipe/synth.hpp"

// Synthetic multi-patient corpus: seizures carry 3 Hz spike-wave discharges,
// the rest of each recording carries blinks, chewing, alpha bursts and
// IMU-tagged walking artifacts whose step rhythm overlaps the seizure rhythm.
namespace earpipe {

struct CorpusConfig {
  int n_patients = 20;
  double duration_s = 300.0;
  double sample_rate = kDefaultSampleRate;
  double imu_rate = kDefaultImuRate;
  double seizure_amplitude_mv = 0.15;
  double motion_amplitude_mv = 0.15;
  int motion_bursts = 3;
  std::array<double, 2> step_rate_hz = {2.5, 3.5};
  double alpha_amplitude_mv = 0.03;
  double blink_amplitude_mv = 0.08;
  double chew_amplitude_mv = 0.05;
  double background_mv = 0.01;
  double mains_mv = 0.02;
  double mains_hz = 60.0;
  std::uint64_t seed = 0;

  bool operator==(const CorpusConfig&) const = default;
};

void validate(const CorpusConfig& cfg);

std::string patient_name(int index);

// Recording layout for one patient (index in [0, n_patients)).
SynthesisSpec patient_spec(const CorpusConfig& cfg, int index);

// A separate recording, drawn like a patient, whose per-modality ground truth
// (both channels) is used for template training.
SynthesisSpec template_spec(const CorpusConfig& cfg);
ModalitySources template_sources(const CorpusConfig& cfg);

}  // namespace earpipe
