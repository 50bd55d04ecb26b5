#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "earpipe/recording.hpp"
#include "earpipe/segment.hpp"

namespace earpipe {

inline constexpr std::size_t kTimeFeatureCount = 8;
inline constexpr std::size_t kMfccFrames = 5;
inline constexpr std::size_t kMfccCoeffs = 10;
inline constexpr std::size_t kFeaturesPerChannel = kTimeFeatureCount + kMfccFrames * kMfccCoeffs;
inline constexpr std::size_t kFeatureCount = kFeaturesPerChannel * kSeparatedRoles.size();

// mean, std (population), mean absolute deviation, skewness, kurtosis
// (non-excess), min, max, rms. Constant windows get skewness = kurtosis = 0.
std::array<double, kTimeFeatureCount> time_features(std::span<const double> window);

struct MfccConfig {
  std::size_t frames = kMfccFrames;  // non-overlapping frames per window
  std::size_t filters = 26;
  std::size_t coeffs = kMfccCoeffs;
  double f_lo_hz = 0.0;
  double f_hi_hz = 0.0;  // 0 selects Nyquist
  double log_floor = 1e-10;
};

// Frame-major (frame 0 coefficients 0..9, frame 1, ...). The window must hold
// exactly 10 s of samples.
std::vector<double> mfcc_features(std::span<const double> window, double sample_rate,
                                  const MfccConfig& cfg = {});

// Triangular mel filterbank over the rfft bins of a frame_len-sample frame.
Eigen::MatrixXd mel_filterbank(std::size_t frame_len, double sample_rate, const MfccConfig& cfg);

// Canonical 348-entry vector: per channel in kSeparatedRoles order, 8 time
// statistics then 50 MFCC values.
std::vector<double> feature_vector(const std::array<std::span<const double>, 6>& channels,
                                   double sample_rate);
std::vector<double> feature_vector(const LabeledEpoch& epoch, double sample_rate);

const std::vector<std::string>& feature_names();

struct FeatureTable {
  Eigen::MatrixXd X;  // one row per epoch, kFeatureCount columns
  std::vector<EpochLabel> labels;
  std::vector<std::string> patient_ids;
  std::vector<double> start_s;

  std::size_t size() const { return labels.size(); }
  FeatureTable rows(const std::vector<std::size_t>& idx) const;
  void append(const FeatureTable& other);
};

// Segments a separated recording and extracts one feature row per window.
FeatureTable extract_features(const Recording& separated, const WindowSpec& spec = {});

// CSV: header = feature names, label, patient_id, start_s.
void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_feature_csv(const std::filesystem::path& path);

}  // namespace earpipe
