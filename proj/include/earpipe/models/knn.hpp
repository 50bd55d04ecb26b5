#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "earpipe/segment.hpp"

namespace earpipe::models {

struct KnnModel {
  Eigen::MatrixXd X;  // training rows
  std::vector<int> classes;
  int k = 5;

  // Majority class among the k nearest rows by Euclidean distance. Equal
  // distances are ordered by row index; a tied vote goes to the lower class id.
  EpochLabel predict(std::span<const double> x) const;
  std::vector<EpochLabel> predict(const Eigen::MatrixXd& Q) const;
};

KnnModel knn_train(const Eigen::MatrixXd& X, const std::vector<EpochLabel>& labels, int k = 5);

}  // namespace earpipe::models
