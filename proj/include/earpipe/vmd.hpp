#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "earpipe/recording.hpp"

namespace earpipe {

enum class VmdInit { Uniform, Zero, Random };

struct VmdConfig {
  int k_modes = 8;
  double alpha = 2000.0;  // bandwidth penalty
  double tau = 0.0;       // dual ascent step; 0 disables the reconstruction constraint
  double tol = 1e-7;      // relative change of the mode spectra
  int max_iter = 500;
  VmdInit init = VmdInit::Uniform;
  std::uint64_t seed = 0;  // used by VmdInit::Random
};

void validate(const VmdConfig& cfg);

struct VmdResult {
  std::vector<Signal> modes;          // ascending centre frequency
  std::vector<double> center_freqs;   // Hz
  Signal residual;                    // input - sum(modes)
  int iterations_used = 0;
  bool converged = false;
  double sample_rate = 0.0;

  Signal mode_sum() const;
};

// Variational mode decomposition: alternating frequency-domain updates of the
// mode spectra (Wiener-like filters around each centre frequency) and of the
// centre frequencies (power-spectrum centroids). The signal is mirror-extended
// to half its length on each side before transforming.
VmdResult vmd_decompose(std::span<const double> x, double sample_rate, const VmdConfig& cfg = {});

struct MotionCorrelation {
  std::vector<double> r;  // per mode, in [-1, 1]
  double threshold = 0.3;

  bool excluded(std::size_t mode) const;
  std::vector<std::size_t> exclusion_set() const;
};

inline constexpr double kEnvelopeSmoothingSeconds = 0.5;
inline constexpr double kDefaultCorrThreshold = 0.3;

// |analytic signal| of a mode, smoothed by a 0.5 s moving average and
// linearly resampled to `out_rate` for `n_out` samples.
Signal mode_envelope(std::span<const double> mode, double sample_rate, double out_rate,
                     std::size_t n_out);

// Pearson correlation between each mode envelope and the accelerometer
// magnitude (mean removed) over their common time support.
MotionCorrelation motion_correlation(const VmdResult& result, const ImuSeries& accel,
                                     double threshold = kDefaultCorrThreshold);

struct MotionReconstruction {
  Signal signal;
  bool all_excluded = false;  // warning: every mode was motion-correlated
};

MotionReconstruction reconstruct_excluding_motion(const VmdResult& result,
                                                  const MotionCorrelation& corr);

// Block-wise motion removal of a whole channel (30 s blocks, 1 s Hann cross-fade).
// A block in which no mode is motion-correlated is copied through unchanged.
struct DenoiseConfig {
  VmdConfig vmd;
  double corr_threshold = kDefaultCorrThreshold;
  double block_s = 30.0;
  double overlap_s = 1.0;
};

struct BlockReport {
  std::size_t block = 0;
  double start_s = 0.0;
  std::vector<double> center_freqs;
  std::vector<double> r;
  std::vector<bool> excluded;
  bool converged = false;
  bool all_excluded = false;
};

struct DenoiseResult {
  Signal signal;
  std::vector<BlockReport> blocks;
};

// Block boundaries: [begin, end) sample ranges overlapping by `overlap` samples.
std::vector<std::pair<std::size_t, std::size_t>> plan_blocks(std::size_t n, std::size_t block,
                                                             std::size_t overlap);

DenoiseResult denoise_channel(std::span<const double> x, double sample_rate,
                              const ImuSeries& accel, const DenoiseConfig& cfg = {});

// Denoises every biopotential channel; the report lists blocks per channel.
Recording denoise_recording(const Recording& rec, const DenoiseConfig& cfg,
                            std::vector<std::vector<BlockReport>>* report = nullptr);

}  // namespace earpipe
