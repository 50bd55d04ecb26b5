#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "earpipe/recording.hpp"

namespace earpipe {

struct PreprocessConfig {
  double mains_hz = 60.0;  // 50 or 60
  double notch_q = 35.0;
  double outlier_sigma = 6.0;
  std::optional<std::pair<double, double>> bandpass;  // (lo, hi) Hz
};

void validate(const PreprocessConfig& cfg, double sample_rate);

// Second-order IIR notch (single forward pass, zero initial state).
Signal notch_filter(std::span<const double> x, double sample_rate, double mains_hz,
                    double q = 35.0);

// Removes the least-squares line. Throws for fewer than 2 samples.
Signal detrend_linear(std::span<const double> x);

struct OutlierResult {
  Signal signal;
  std::vector<std::size_t> replaced;  // indices that were interpolated
};

// Samples with |x - median| > sigma * 1.4826 * MAD are replaced by linear
// interpolation between the nearest inliers. Constant input is returned as is.
OutlierResult outlier_clip_detailed(std::span<const double> x, double sigma = 6.0);
Signal outlier_clip(std::span<const double> x, double sigma = 6.0);

// 4th-order Butterworth band-pass applied forward and backward (zero phase).
Signal bandpass(std::span<const double> x, double sample_rate, double lo_hz, double hi_hz);

// Notch, detrend, outlier clip and optional band-pass on every biopotential channel.
Recording preprocess(const Recording& rec, const PreprocessConfig& cfg);

struct ImpedanceReading {
  double v_rms = 0.0;       // volts
  double i_amp = 6e-9;      // amperes (amplitude)
  double series_r = 5000.0; // ohms
  double z = 0.0;           // ohms
  bool in_range = false;    // 0 <= z <= 5 kOhm
};

inline constexpr double kImpedanceCeilingOhm = 5000.0;

// z = v_rms * sqrt(2) / i_amp - series_r. Throws when the result is negative;
// deficits within 1e-6 * series_r are treated as input rounding and reported as 0.
ImpedanceReading electrode_impedance(double v_rms, double i_amp = 6e-9,
                                     double series_r = 5000.0);

}  // namespace earpipe
