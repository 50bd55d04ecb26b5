#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace earpipe {

enum class NormalizationKind { ZScore, MinMax };

std::string_view to_string(NormalizationKind kind);
NormalizationKind parse_normalization(std::string_view name);

struct NormalizationParams {
  NormalizationKind kind = NormalizationKind::ZScore;
  std::vector<double> offset;  // mean (z-score) or min (min-max)
  std::vector<double> scale;   // std or max - min
  std::vector<bool> passthrough;  // zero spread: feature left unchanged
  std::string fitted_on;  // free-form description of the fitting population

  bool operator==(const NormalizationParams&) const = default;
};

// Rows are samples. Throws on an empty matrix.
NormalizationParams fit_normalizer(const Eigen::MatrixXd& train,
                                   NormalizationKind kind = NormalizationKind::ZScore,
                                   std::string fitted_on = {});

Eigen::MatrixXd apply_normalizer(const NormalizationParams& params, const Eigen::MatrixXd& X);

// FNV-1a over the numeric parameters; used to detect leakage in tests.
std::uint64_t params_hash(const NormalizationParams& params);

}  // namespace earpipe
