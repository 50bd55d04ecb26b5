#include "earpipe/models/svm.hpp"

#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "earpipe/error.hpp"
#include "earpipe/models/labels.hpp"

namespace earpipe::models {
namespace {

// Kernel rows, either from a dense precomputed matrix or computed on demand
// with a small LRU cache.
class KernelRows {
 public:
  KernelRows(const Eigen::MatrixXd& X, double gamma, std::size_t dense_limit)
      : X_(X), gamma_(gamma), n_(static_cast<std::size_t>(X.rows())) {
    norms_ = X.rowwise().squaredNorm();
    if (n_ <= dense_limit) {
      dense_ = X * X.transpose();
      for (Eigen::Index j = 0; j < dense_.cols(); ++j) {
        for (Eigen::Index i = 0; i < dense_.rows(); ++i) {
          dense_(i, j) = i == j ? 1.0 : to_kernel(i, j, dense_(i, j));
        }
      }
      is_dense_ = true;
    } else {
      capacity_ = std::max<std::size_t>(2, (std::size_t{256} << 20) / (n_ * sizeof(double)));
    }
  }

  const double* row(std::size_t i) {
    if (is_dense_) return dense_.data() + static_cast<Eigen::Index>(i) * dense_.rows();
    if (auto it = cache_.find(i); it != cache_.end()) {
      order_.splice(order_.begin(), order_, it->second.second);
      return it->second.first.data();
    }
    if (cache_.size() >= capacity_) {
      cache_.erase(order_.back());
      order_.pop_back();
    }
    Eigen::VectorXd dots = X_ * X_.row(static_cast<Eigen::Index>(i)).transpose();
    std::vector<double> r(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      r[j] = j == i ? 1.0
                    : to_kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j),
                                dots(static_cast<Eigen::Index>(j)));
    }
    order_.push_front(i);
    auto& slot = cache_[i];
    slot.first = std::move(r);
    slot.second = order_.begin();
    return slot.first.data();
  }

 private:
  double to_kernel(Eigen::Index i, Eigen::Index j, double dot) const {
    const double d2 = std::max(0.0, norms_(i) + norms_(j) - 2.0 * dot);
    return std::exp(-gamma_ * d2);
  }

  const Eigen::MatrixXd& X_;
  double gamma_;
  std::size_t n_;
  Eigen::VectorXd norms_;
  bool is_dense_ = false;
  Eigen::MatrixXd dense_;
  std::size_t capacity_ = 0;
  std::list<std::size_t> order_;
  std::unordered_map<std::size_t, std::pair<std::vector<double>, std::list<std::size_t>::iterator>> cache_;
};

constexpr double kTau = 1e-12;

}  // namespace

void validate(const SvmConfig& cfg) {
  require(cfg.gamma > 0, "svm: gamma must be positive");
  require(cfg.C > 0, "svm: C must be positive");
  require(cfg.tol > 0, "svm: tol must be positive");
  require(cfg.max_iter >= 1, "svm: max_iter must be >= 1");
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  require(a.size() == b.size(), "rbf_kernel: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

SvmDual svm_solve(const Eigen::MatrixXd& X, const std::vector<EpochLabel>& labels,
                  const SvmConfig& cfg) {
  validate(cfg);
  require(static_cast<std::size_t>(X.rows()) == labels.size(), "svm: row count differs from label count");
  require_both_classes(labels, "svm_train");
  const std::size_t n = labels.size();
  const auto y = to_signs(labels);
  const double C = cfg.C;
  KernelRows K(X, cfg.gamma, cfg.dense_kernel_limit);

  std::vector<double> alpha(n, 0.0);
  std::vector<double> G(n, -1.0);
  auto upper = [&](std::size_t t) { return alpha[t] >= C; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0; };

  SvmDual out;
  long iter = 0;
  while (iter < cfg.max_iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * G[t];
      const bool in_up = y[t] > 0 ? !upper(t) : !lower(t);
      const bool in_low = y[t] > 0 ? !lower(t) : !upper(t);
      if (in_up && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < cfg.tol) {
      out.converged = true;
      break;
    }
    ++iter;

    const double* Ki = K.row(i);
    const double* Kj = K.row(j);
    const double Qij = y[i] * y[j] * Ki[j];
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = 2.0 + 2.0 * Qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * Qij;
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = sum;
        }
        if (alpha[i] < 0) {
          alpha[i] = 0;
          alpha[j] = sum;
        }
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) {
      G[t] += y[t] * (y[i] * Ki[t] * di + y[j] * Kj[t] * dj);
    }
  }

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : 0.5 * (ub + lb);
  out.alpha = std::move(alpha);
  out.bias = -rho;
  out.iterations = iter;
  return out;
}

SvmModel svm_train(const Eigen::MatrixXd& X, const std::vector<EpochLabel>& labels,
                   const SvmConfig& cfg) {
  const auto dual = svm_solve(X, labels, cfg);
  SvmModel m;
  m.gamma = cfg.gamma;
  m.C = cfg.C;
  m.bias = dual.bias;
  m.iterations = dual.iterations;
  m.converged = dual.converged;
  std::vector<Eigen::Index> sv;
  for (std::size_t t = 0; t < dual.alpha.size(); ++t) {
    if (dual.alpha[t] > 0) {
      sv.push_back(static_cast<Eigen::Index>(t));
      m.coef.push_back(dual.alpha[t] * to_sign(labels[t]));
    }
  }
  m.support.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
  for (std::size_t r = 0; r < sv.size(); ++r) m.support.row(static_cast<Eigen::Index>(r)) = X.row(sv[r]);
  return m;
}

double SvmModel::decision(std::span<const double> x) const {
  require(static_cast<Eigen::Index>(x.size()) == support.cols() || support.rows() == 0,
          "svm_predict: dimension mismatch");
  double f = bias;
  Eigen::Map<const Eigen::RowVectorXd> q(x.data(), static_cast<Eigen::Index>(x.size()));
  for (Eigen::Index r = 0; r < support.rows(); ++r) {
    const double d2 = (support.row(r) - q).squaredNorm();
    f += coef[static_cast<std::size_t>(r)] * std::exp(-gamma * d2);
  }
  return f;
}

EpochLabel SvmModel::predict(std::span<const double> x) const { return from_sign(decision(x)); }

std::vector<EpochLabel> SvmModel::predict(const Eigen::MatrixXd& X) const {
  std::vector<EpochLabel> out;
  out.reserve(static_cast<std::size_t>(X.rows()));
  Eigen::RowVectorXd row;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    row = X.row(r);
    out.push_back(predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
  }
  return out;
}

}  // namespace earpipe::models
