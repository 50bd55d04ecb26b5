#include "earpipe/models/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "earpipe/error.hpp"
#include "earpipe/models/labels.hpp"
#include "earpipe/synth.hpp"

namespace earpipe::models {
namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();
};

double gini(double c0, double c1) {
  const double n = c0 + c1;
  if (n == 0) return 0.0;
  const double p0 = c0 / n;
  const double p1 = c1 / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const std::vector<int>& classes, int max_depth,
              int max_features, std::uint64_t seed)
      : X_(X), y_(classes), max_depth_(max_depth), max_features_(max_features), rng_(seed) {
    features_.resize(static_cast<std::size_t>(X.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree build(std::vector<std::size_t> rows) {
    DecisionTree t;
    grow(t, rows, 0);
    return t;
  }

 private:
  int grow(DecisionTree& t, std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    int counts[2] = {0, 0};
    for (auto r : rows) ++counts[y_[r]];
    t.nodes[static_cast<std::size_t>(id)].label = counts[1] > counts[0] ? 1 : 0;
    if (depth >= max_depth_ || counts[0] == 0 || counts[1] == 0 || rows.size() < 2) return id;

    const Split s = best_split(rows);
    if (s.feature < 0) return id;
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto r : rows) {
      (X_(static_cast<Eigen::Index>(r), s.feature) <= s.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(t, left, depth + 1);
    const int r = grow(t, right, depth + 1);
    auto& node = t.nodes[static_cast<std::size_t>(id)];
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  Split best_split(const std::vector<std::size_t>& rows) {
    // Random feature order; the first max_features are the sample, the rest a
    // fallback for nodes where every sampled feature is constant.
    std::shuffle(features_.begin(), features_.end(), rng_);
    Split best;
    const std::size_t m = rows.size();
    std::vector<std::pair<double, int>> vals(m);
    for (std::size_t fi = 0; fi < features_.size(); ++fi) {
      if (fi >= static_cast<std::size_t>(max_features_) && best.feature >= 0) break;
      const int f = features_[fi];
      for (std::size_t i = 0; i < m; ++i) {
        vals[i] = {X_(static_cast<Eigen::Index>(rows[i]), f), y_[rows[i]]};
      }
      std::sort(vals.begin(), vals.end());
      double total[2] = {0, 0};
      for (const auto& v : vals) total[v.second] += 1;
      double left[2] = {0, 0};
      for (std::size_t i = 0; i + 1 < m; ++i) {
        left[vals[i].second] += 1;
        if (!(vals[i].first < vals[i + 1].first)) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(m - i - 1);
        const double imp = nl * gini(left[0], left[1]) +
                           nr * gini(total[0] - left[0], total[1] - left[1]);
        if (imp < best.impurity) {
          best.impurity = imp;
          best.feature = f;
          double thr = 0.5 * (vals[i].first + vals[i + 1].first);
          if (!(thr < vals[i + 1].first)) thr = vals[i].first;
          best.threshold = thr;
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  const std::vector<int>& y_;
  int max_depth_;
  int max_features_;
  std::mt19937_64 rng_;
  std::vector<int> features_;
};

}  // namespace

void validate(const ForestConfig& cfg) {
  require(cfg.n_trees >= 1, "rfc: n_trees must be >= 1");
  require(cfg.max_depth >= 0, "rfc: max_depth must be >= 0");
  require(cfg.max_features >= 0, "rfc: max_features must be >= 0");
}

int DecisionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].label;
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

DecisionTree fit_tree(const Eigen::MatrixXd& X, const std::vector<int>& classes,
                      std::vector<std::size_t> rows, int max_depth, int max_features,
                      std::uint64_t seed) {
  require(!rows.empty(), "fit_tree: no rows");
  const int mf = max_features > 0 ? std::min<int>(max_features, static_cast<int>(X.cols()))
                                  : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(X.cols()))));
  TreeBuilder b(X, classes, max_depth, mf, seed);
  return b.build(std::move(rows));
}

std::array<int, 2> ForestModel::votes(std::span<const double> x) const {
  require(x.size() == n_features, "rfc_predict: dimension mismatch");
  std::array<int, 2> v = {0, 0};
  for (const auto& t : trees) ++v[static_cast<std::size_t>(t.predict(x))];
  return v;
}

EpochLabel ForestModel::predict(std::span<const double> x) const {
  const auto v = votes(x);
  return from_class(v[1] > v[0] ? 1 : 0);
}

std::vector<EpochLabel> ForestModel::predict(const Eigen::MatrixXd& X) const {
  std::vector<EpochLabel> out;
  Eigen::RowVectorXd row;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    row = X.row(r);
    out.push_back(predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
  }
  return out;
}

ForestModel rfc_train(const Eigen::MatrixXd& X, const std::vector<EpochLabel>& labels,
                      const ForestConfig& cfg) {
  validate(cfg);
  require(static_cast<std::size_t>(X.rows()) == labels.size(), "rfc: row count differs from label count");
  require(X.rows() >= 1, "rfc: empty training set");
  const auto classes = to_classes(labels);
  const auto n = static_cast<std::size_t>(X.rows());
  ForestModel m;
  m.n_features = static_cast<std::size_t>(X.cols());
  for (int t = 0; t < cfg.n_trees; ++t) {
    const auto tree_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    std::vector<std::size_t> rows(n);
    if (cfg.bootstrap) {
      std::mt19937_64 rng(derive_seed(tree_seed, 0xb007));
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    m.trees.push_back(fit_tree(X, classes, std::move(rows), cfg.max_depth, cfg.max_features, tree_seed));
  }
  return m;
}

}  // namespace earpipe::models
