#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "earpipe/segment.hpp"

namespace earpipe::models {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  int label = 0;  // majority class of the node's samples

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  int predict(std::span<const double> x) const;
  int depth() const;
  bool operator==(const DecisionTree&) const = default;
};

struct ForestConfig {
  int n_trees = 10;
  int max_depth = 100;
  int max_features = 0;  // 0 selects ceil(sqrt(d))
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

void validate(const ForestConfig& cfg);

// Gini-split CART tree on the given rows. When none of the sampled features can
// split a node, the remaining features are tried before giving up.
DecisionTree fit_tree(const Eigen::MatrixXd& X, const std::vector<int>& classes,
                      std::vector<std::size_t> rows, int max_depth, int max_features,
                      std::uint64_t seed);

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::size_t n_features = 0;

  std::array<int, 2> votes(std::span<const double> x) const;
  // Majority vote; a tie goes to class 0 (non_seizure).
  EpochLabel predict(std::span<const double> x) const;
  std::vector<EpochLabel> predict(const Eigen::MatrixXd& X) const;
};

ForestModel rfc_train(const Eigen::MatrixXd& X, const std::vector<EpochLabel>& labels,
                      const ForestConfig& cfg = {});

}  // namespace earpipe::models
