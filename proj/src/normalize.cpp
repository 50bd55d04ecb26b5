#include "earpipe/normalize.hpp"

#include <cmath>
#include <cstring>

#include "earpipe/error.hpp"

namespace earpipe {

std::string_view to_string(NormalizationKind kind) {
  return kind == NormalizationKind::ZScore ? "zscore" : "minmax";
}

NormalizationKind parse_normalization(std::string_view name) {
  if (name == "zscore") return NormalizationKind::ZScore;
  if (name == "minmax") return NormalizationKind::MinMax;
  throw_parameter("normalization must be 'zscore' or 'minmax', got '" + std::string(name) + "'");
}

NormalizationParams fit_normalizer(const Eigen::MatrixXd& train, NormalizationKind kind,
                                   std::string fitted_on) {
  require(train.rows() > 0 && train.cols() > 0, "fit_normalizer: empty training set");
  NormalizationParams p;
  p.kind = kind;
  p.fitted_on = std::move(fitted_on);
  const auto n = static_cast<double>(train.rows());
  for (Eigen::Index c = 0; c < train.cols(); ++c) {
    const auto col = train.col(c);
    double offset = 0.0;
    double scale = 0.0;
    if (kind == NormalizationKind::ZScore) {
      offset = col.sum() / n;
      scale = std::sqrt((col.array() - offset).square().sum() / n);
    } else {
      offset = col.minCoeff();
      scale = col.maxCoeff() - offset;
    }
    p.offset.push_back(offset);
    p.scale.push_back(scale);
    p.passthrough.push_back(!(scale > 0) || !std::isfinite(scale));
  }
  return p;
}

Eigen::MatrixXd apply_normalizer(const NormalizationParams& params, const Eigen::MatrixXd& X) {
  require(static_cast<std::size_t>(X.cols()) == params.offset.size(),
          "apply_normalizer: feature count does not match the fitted parameters");
  Eigen::MatrixXd out = X;
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    if (params.passthrough[i]) continue;
    out.col(c) = (X.col(c).array() - params.offset[i]) / params.scale[i];
  }
  return out;
}

std::uint64_t params_hash(const NormalizationParams& params) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const int kind = static_cast<int>(params.kind);
  mix(&kind, sizeof kind);
  for (std::size_t i = 0; i < params.offset.size(); ++i) {
    mix(&params.offset[i], sizeof(double));
    mix(&params.scale[i], sizeof(double));
    const unsigned char pass = params.passthrough[i] ? 1 : 0;
    mix(&pass, 1);
  }
  return h;
}

}  // namespace earpipe
