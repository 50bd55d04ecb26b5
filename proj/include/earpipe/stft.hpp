#pragma once

#include <span>

#include <Eigen/Dense>

#include "earpipe/recording.hpp"

namespace earpipe {

struct StftConfig {
  std::size_t window_len = 256;
  std::size_t hop = 128;
};

// Throws unless 0 < hop <= window_len and the periodic Hann window overlap-adds
// to a constant at this hop.
void validate(const StftConfig& cfg);

struct Spectrogram {
  Eigen::MatrixXcd complex;  // bins x frames
  std::size_t n_samples = 0; // original signal length
  std::size_t pad_front = 0; // zeros prepended before framing
  double sample_rate = 0.0;
  StftConfig cfg;

  Eigen::Index bins() const { return complex.rows(); }
  Eigen::Index frames() const { return complex.cols(); }
  Eigen::MatrixXd power() const { return complex.cwiseAbs2(); }
  double bin_hz(Eigen::Index k) const {
    return sample_rate * static_cast<double>(k) / static_cast<double>(cfg.window_len);
  }
  double frame_s(Eigen::Index m) const;
};

// Frames start window_len - hop samples before the signal, so every sample is
// covered by window_len / hop frames.
Spectrogram stft(std::span<const double> x, double sample_rate, const StftConfig& cfg = {});

// Weighted overlap-add inverse (Hann synthesis window, normalized by the
// summed squared window).
Signal istft(const Spectrogram& spec);
Signal istft(const Eigen::MatrixXcd& complex, const Spectrogram& layout);

}  // namespace earpipe
