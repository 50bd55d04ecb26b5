#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "earpipe/bands.hpp"

namespace earpipe {

struct SnrConfig {
  double epoch_s = 10.0;   // non-overlapping report epochs
  double segment_s = 1.0;  // Welch segment
  double overlap = 0.5;    // fraction of a segment
  double floor = 1e-30;    // applied to both mean powers
};

// Mean in-band PSD over mean out-of-band PSD, in dB, from one Welch estimate
// over the whole input. Band edges are inclusive.
double snr_db(std::span<const double> x, double sample_rate, double lo_hz, double hi_hz,
              const SnrConfig& cfg = {});

struct SnrReport {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
  std::vector<double> epoch_db;
  double mean_db = 0.0;
};

// Per-epoch SNR over consecutive 10 s epochs (a trailing partial epoch is
// dropped; a signal shorter than one epoch is a single epoch).
SnrReport snr_report(std::span<const double> x, double sample_rate, double lo_hz, double hi_hz,
                     const SnrConfig& cfg = {});

struct SnrComparison {
  std::vector<SnrReport> raw;
  std::vector<SnrReport> reconstructed;
  std::vector<double> delta_db;  // reconstructed mean - raw mean, per band
};

SnrComparison compare_snr(std::span<const double> raw, std::span<const double> reconstructed,
                          double sample_rate, const std::vector<Band>& bands,
                          const SnrConfig& cfg = {});

nlohmann::json to_json(const SnrReport& r);
nlohmann::json to_json(const SnrComparison& c);

}  // namespace earpipe
