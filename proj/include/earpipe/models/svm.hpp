#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "earpipe/segment.hpp"

namespace earpipe::models {

struct SvmConfig {
  double gamma = 0.5;  // rbf: exp(-gamma |x - z|^2)
  double C = 20.0;
  double tol = 1e-3;   // maximal violating pair gap at which SMO stops
  long max_iter = 10'000'000;
  // Training sets up to this size get a precomputed kernel matrix; larger ones
  // compute kernel rows on demand.
  std::size_t dense_kernel_limit = 5000;
};

void validate(const SvmConfig& cfg);

struct SvmModel {
  Eigen::MatrixXd support;   // one support vector per row
  std::vector<double> coef;  // alpha_i * y_i
  double bias = 0.0;
  double gamma = 0.5;
  double C = 20.0;
  long iterations = 0;
  bool converged = false;

  double decision(std::span<const double> x) const;
  EpochLabel predict(std::span<const double> x) const;
  std::vector<EpochLabel> predict(const Eigen::MatrixXd& X) const;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

// Full dual solution, exposed for KKT checks.
struct SvmDual {
  std::vector<double> alpha;
  double bias = 0.0;
  long iterations = 0;
  bool converged = false;
};

SvmDual svm_solve(const Eigen::MatrixXd& X, const std::vector<EpochLabel>& y, const SvmConfig& cfg);

// SMO with maximal-violating-pair working-set selection.
SvmModel svm_train(const Eigen::MatrixXd& X, const std::vector<EpochLabel>& y,
                   const SvmConfig& cfg = {});

}  // namespace earpipe::models
