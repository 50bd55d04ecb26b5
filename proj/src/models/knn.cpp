#include "earpipe/models/knn.hpp"

#include <algorithm>
#include <numeric>

#include "earpipe/error.hpp"
#include "earpipe/models/labels.hpp"

namespace earpipe::models {

KnnModel knn_train(const Eigen::MatrixXd& X, const std::vector<EpochLabel>& labels, int k) {
  require(k >= 1, "knn: k must be >= 1");
  require(static_cast<std::size_t>(X.rows()) == labels.size(), "knn: row count differs from label count");
  require(X.rows() >= 1, "knn: empty training set");
  return KnnModel{X, to_classes(labels), k};
}

EpochLabel KnnModel::predict(std::span<const double> x) const {
  require(static_cast<Eigen::Index>(x.size()) == X.cols(), "knn_predict: dimension mismatch");
  Eigen::Map<const Eigen::RowVectorXd> q(x.data(), X.cols());
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<std::pair<double, std::size_t>> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = {(X.row(static_cast<Eigen::Index>(i)) - q).squaredNorm(), i};
  }
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n);
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
  int votes[2] = {0, 0};
  for (std::size_t i = 0; i < kk; ++i) ++votes[classes[d[i].second]];
  return from_class(votes[1] > votes[0] ? 1 : 0);
}

std::vector<EpochLabel> KnnModel::predict(const Eigen::MatrixXd& Q) const {
  std::vector<EpochLabel> out;
  Eigen::RowVectorXd row;
  for (Eigen::Index r = 0; r < Q.rows(); ++r) {
    row = Q.row(r);
    out.push_back(predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
  }
  return out;
}

}  // namespace earpipe::models
