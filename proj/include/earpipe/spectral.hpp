#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Small numerical helpers shared by the signal-processing modules.
namespace earpipe::dsp {

using Signal = std::vector<double>;

// Hann taper. The periodic form (denominator n) is the COLA-friendly variant.
Signal hann(std::size_t n, bool periodic = true);

struct Psd {
  std::vector<double> freqs_hz;
  std::vector<double> power;  // one-sided density, units^2 / Hz
};

// Welch estimate with periodic-Hann segments of `segment_len` samples.
// Signals shorter than one segment are treated as a single zero-padded one.
Psd welch(std::span<const double> x, double sample_rate, std::size_t segment_len,
          std::size_t overlap);

// |analytic signal| computed through the FFT.
Signal analytic_envelope(std::span<const double> x);

// Frequency (Hz) of the largest-magnitude rfft bin, DC excluded.
double dominant_frequency(std::span<const double> x, double sample_rate);

// Centred moving average whose window shrinks symmetrically at the edges,
// so affine inputs are reproduced exactly.
Signal moving_average(std::span<const double> x, std::size_t width);

// Linear interpolation of x (sampled at rate_in, t0 = 0) at times t_k = k / rate_out.
Signal resample_linear(std::span<const double> x, double rate_in, double rate_out,
                       std::size_t n_out);

// Pearson correlation; 0 when either side has (numerically) zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> x);
double rms(std::span<const double> x);
double l2_norm(std::span<const double> x);
double relative_l2_error(std::span<const double> reference, std::span<const double> estimate);

}  // namespace earpipe::dsp
