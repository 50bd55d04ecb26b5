#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "blobs.hpp"
#include "earpipe/error.hpp"
#include "earpipe/models/labels.hpp"
#include "earpipe/models/model_io.hpp"

using namespace earpipe;
using namespace earpipe::models;

namespace {

EpochLabel knn_oracle(const Eigen::MatrixXd& X, const std::vector<EpochLabel>& y, int k,
                      const Eigen::RowVectorXd& q) {
  std::vector<std::pair<double, std::size_t>> d;
  for (Eigen::Index i = 0; i < X.rows(); ++i) d.push_back({(X.row(i) - q).squaredNorm(), static_cast<std::size_t>(i)});
  std::sort(d.begin(), d.end());
  int votes = 0;
  for (int i = 0; i < k; ++i) votes += y[d[static_cast<std::size_t>(i)].second] == EpochLabel::Seizure;
  return 2 * votes > k ? EpochLabel::Seizure : EpochLabel::NonSeizure;
}

int walk(const DecisionTree& t, const Eigen::RowVectorXd& q) {
  int i = 0;
  while (t.nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = t.nodes[static_cast<std::size_t>(i)];
    i = q(n.feature) <= n.threshold ? n.left : n.right;
  }
  return t.nodes[static_cast<std::size_t>(i)].label;
}

EpochLabel forest_oracle(const ForestModel& f, const Eigen::RowVectorXd& q) {
  int ones = 0;
  for (const auto& t : f.trees) ones += walk(t, q);
  const int zeros = static_cast<int>(f.trees.size()) - ones;
  return ones > zeros ? EpochLabel::Seizure : EpochLabel::NonSeizure;
}

}  // namespace

TEST_CASE("classifiers fit separable blobs exactly") {
  const auto d = blobs::separable(1, 200, 5);
  CHECK(blobs::accuracy(d.y, svm_train(d.X, d.y).predict(d.X)) == 1.0);
  CHECK(blobs::accuracy(d.y, knn_train(d.X, d.y, 5).predict(d.X)) == 1.0);
  CHECK(blobs::accuracy(d.y, rfc_train(d.X, d.y).predict(d.X)) == 1.0);
}

TEST_CASE("classifiers generalize across a margin") {
  const auto train = blobs::margin2(2, 400, 3);
  const auto test = blobs::margin2(3, 400, 3);
  CHECK(blobs::accuracy(test.y, svm_train(train.X, train.y).predict(test.X)) >= 0.95);
  CHECK(blobs::accuracy(test.y, knn_train(train.X, train.y, 5).predict(test.X)) >= 0.95);
  CHECK(blobs::accuracy(test.y, rfc_train(train.X, train.y).predict(test.X)) >= 0.95);
}

TEST_CASE("knn agrees with an exhaustive search") {
  const auto train = blobs::margin2(4, 300, 4);
  const auto q = blobs::margin2(5, 100, 4);
  const auto model = knn_train(train.X, train.y, 5);
  const auto got = model.predict(q.X);
  for (Eigen::Index i = 0; i < q.X.rows(); ++i) {
    CHECK(got[static_cast<std::size_t>(i)] == knn_oracle(train.X, train.y, 5, q.X.row(i)));
  }
}

TEST_CASE("forest agrees with walking every tree by hand") {
  const auto train = blobs::margin2(6, 300, 4);
  const auto q = blobs::margin2(7, 100, 4);
  const auto forest = rfc_train(train.X, train.y, {.seed = 3});
  REQUIRE(forest.trees.size() == 10);
  for (Eigen::Index i = 0; i < q.X.rows(); ++i) {
    const Eigen::RowVectorXd row = q.X.row(i);
    CHECK(forest.predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))) ==
          forest_oracle(forest, row));
  }
  for (const auto& t : forest.trees) CHECK(t.depth() <= 100);
}

TEST_CASE("forest ties go to non-seizure") {
  ForestModel f;
  DecisionTree zero, one;
  zero.nodes = {TreeNode{.label = 0}};
  one.nodes = {TreeNode{.label = 1}};
  f.trees = {zero, one};
  f.n_features = 1;
  const double x = 0.0;
  CHECK(f.predict(std::span<const double>(&x, 1)) == EpochLabel::NonSeizure);
}

TEST_CASE("svm dual satisfies its constraints") {
  const auto d = blobs::margin2(8, 200, 3);
  SvmConfig cfg;
  const auto dual = svm_solve(d.X, d.y, cfg);
  CHECK(dual.converged);
  double balance = 0;
  for (std::size_t i = 0; i < dual.alpha.size(); ++i) {
    CHECK(dual.alpha[i] >= 0.0);
    CHECK(dual.alpha[i] <= cfg.C);
    balance += dual.alpha[i] * to_sign(d.y[i]);
  }
  CHECK(std::abs(balance) < 1e-9);
}

TEST_CASE("svm on-demand kernel rows match the dense path") {
  const auto d = blobs::margin2(9, 120, 3);
  SvmConfig dense;
  SvmConfig lazy;
  lazy.dense_kernel_limit = 10;
  const auto a = svm_train(d.X, d.y, dense), b = svm_train(d.X, d.y, lazy);
  CHECK(a.bias == doctest::Approx(b.bias).epsilon(1e-9));
  CHECK(a.predict(d.X) == b.predict(d.X));
}

TEST_CASE("rbf kernel") {
  const std::vector<double> a = {0, 0}, b = {1, 1};
  CHECK(rbf_kernel(a, b, 0.5) == doctest::Approx(std::exp(-1.0)));
  CHECK(rbf_kernel(a, a, 0.5) == 1.0);
}

TEST_CASE("svm needs both classes; knn and forest become constant") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(4, 2);
  const std::vector<EpochLabel> y(4, EpochLabel::Seizure);
  CHECK_THROWS_AS(svm_train(X, y), Error);
  CHECK(rfc_train(X, y).predict(X) == y);
  CHECK(knn_train(X, y, 3).predict(X) == y);
}

TEST_CASE("depth-zero trees predict the majority class") {
  const auto d = blobs::margin2(12, 101, 2);
  const auto forest = rfc_train(d.X, d.y, {.n_trees = 1, .max_depth = 0, .bootstrap = false});
  const long seizures = std::count(d.y.begin(), d.y.end(), EpochLabel::Seizure);
  const auto majority = 2 * seizures > 101 ? EpochLabel::Seizure : EpochLabel::NonSeizure;
  for (auto p : forest.predict(d.X)) CHECK(p == majority);
}

TEST_CASE("free support vectors sit on the margin") {
  const auto d = blobs::margin2(13, 150, 2);
  SvmConfig cfg;
  cfg.tol = 1e-6;
  const auto dual = svm_solve(d.X, d.y, cfg);
  for (std::size_t i = 0; i < dual.alpha.size(); ++i) {
    if (dual.alpha[i] <= 1e-8 || dual.alpha[i] >= cfg.C - 1e-8) continue;
    double f = dual.bias;
    for (std::size_t j = 0; j < dual.alpha.size(); ++j) {
      const Eigen::RowVectorXd a = d.X.row(static_cast<Eigen::Index>(i)), b = d.X.row(static_cast<Eigen::Index>(j));
      f += dual.alpha[j] * to_sign(d.y[j]) * std::exp(-cfg.gamma * (a - b).squaredNorm());
    }
    CHECK(std::abs(to_sign(d.y[i]) * f - 1.0) <= 1e-5);
  }
}

TEST_CASE("stored models predict the same after a round trip") {
  const auto d = blobs::margin2(10, 150, 3);
  const auto q = blobs::margin2(11, 50, 3);
  const auto dir = std::filesystem::temp_directory_path();
  const std::vector<AnyModel> models = {svm_train(d.X, d.y), knn_train(d.X, d.y, 5), rfc_train(d.X, d.y)};
  for (const auto& m : models) {
    StoredModel s{m, fit_normalizer(d.X, NormalizationKind::MinMax, "train"), {{"seed", 1}}};
    const auto path = dir / ("earpipe_test_model_" + std::string(to_string(kind_of(m))) + ".bin");
    save_model(s, path);
    const auto back = load_model(path);
    CHECK(kind_of(back.model) == kind_of(m));
    CHECK(back.normalizer == s.normalizer);
    CHECK(back.provenance == s.provenance);
    std::visit(
        [&](const auto& orig) {
          using T = std::decay_t<decltype(orig)>;
          if constexpr (!std::is_same_v<T, Cnn1d>) {
            CHECK(std::get<T>(back.model).predict(q.X) == orig.predict(q.X));
          }
        },
        m);
  }
}

TEST_CASE("model kind names") {
  for (auto k : {ModelKind::Svm, ModelKind::Knn, ModelKind::Rfc, ModelKind::Cnn}) {
    CHECK(parse_model_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_model_kind("lstm"), Error);
}
