#pragma once

#include <span>
#include <vector>

#include "earpipe/recording.hpp"

namespace earpipe {

struct EmdConfig {
  int max_imfs = 8;
  double sd_threshold = 0.25;  // Cauchy-type sifting stop
  int max_sift_iters = 100;
  int mirrored_extrema = 2;    // extrema reflected about each end
};

void validate(const EmdConfig& cfg);

struct ImfSet {
  std::vector<Signal> imfs;  // highest characteristic frequency first
  Signal residual;

  Signal reconstruct() const;
};

struct Extrema {
  std::vector<std::size_t> maxima;
  std::vector<std::size_t> minima;
};

// Strict local extrema; a flat run counts once, at its centre.
Extrema find_extrema(std::span<const double> x);

// Natural cubic spline through (knots_x, knots_y), evaluated at 0..n-1.
Signal cubic_spline(std::span<const double> knots_x, std::span<const double> knots_y,
                    std::size_t n);

// Empirical mode decomposition by sifting. Signals with fewer than two maxima
// or two minima come back as a pure residual.
ImfSet emd_decompose(std::span<const double> x, const EmdConfig& cfg = {});

struct ModalityAssignment {
  Signal emg;  // IMF 1
  Signal eeg;  // IMF 3
  Signal eog;  // IMF 4 + IMF 5 + IMF 6
  bool partial_eog = false;  // fewer than 6 IMFs
  bool degenerate = false;   // fewer than 3 IMFs: no EEG component
};

ModalityAssignment assign_modalities(const ImfSet& imfs);

// Runs EMD on MixedLeft/MixedRight and returns a recording with the six
// separated roles in canonical order.
Recording separate_emd(const Recording& rec, const EmdConfig& cfg = {});

}  // namespace earpipe
