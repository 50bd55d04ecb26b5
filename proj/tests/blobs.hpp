#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "earpipe/segment.hpp"

namespace blobs {

struct Data {
  Eigen::MatrixXd X;
  std::vector<earpipe::EpochLabel> y;
};

// Two tight Gaussian clusters centred at -3 and +3 on every axis.
inline Data separable(std::uint64_t seed, int n, int dims) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.5);
  Data d{Eigen::MatrixXd(n, dims), {}};
  for (int i = 0; i < n; ++i) {
    const bool pos = i % 2 == 1;
    for (int j = 0; j < dims; ++j) d.X(i, j) = (pos ? 3.0 : -3.0) + g(rng);
    d.y.push_back(pos ? earpipe::EpochLabel::Seizure : earpipe::EpochLabel::NonSeizure);
  }
  return d;
}

// Uniform points in [-4, 4]^dims labelled by the sign of the first coordinate,
// with the slab |x0| < 1 left empty (a gap of width 2 between the classes).
inline Data margin2(std::uint64_t seed, int n, int dims) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  Data d{Eigen::MatrixXd(n, dims), {}};
  for (int i = 0; i < n; ++i) {
    double x0;
    do x0 = u(rng);
    while (std::abs(x0) < 1.0);
    d.X(i, 0) = x0;
    for (int j = 1; j < dims; ++j) d.X(i, j) = u(rng);
    d.y.push_back(x0 > 0 ? earpipe::EpochLabel::Seizure : earpipe::EpochLabel::NonSeizure);
  }
  return d;
}

inline double accuracy(const std::vector<earpipe::EpochLabel>& truth,
                       const std::vector<earpipe::EpochLabel>& pred) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += truth[i] == pred[i];
  return static_cast<double>(ok) / static_cast<double>(truth.size());
}

}  // namespace blobs
