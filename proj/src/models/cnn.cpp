#include "earpipe/models/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "earpipe/error.hpp"
#include "earpipe/synth.hpp"

namespace earpipe::models {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr std::size_t kConvLayers = 3;
constexpr std::size_t kDenseLayers = 4;  // three hidden + output

std::size_t conv_w(std::size_t i) { return 2 * i; }
std::size_t dense_w(std::size_t j) { return 2 * kConvLayers + 2 * j; }

struct ConvCache {
  MatrixXd cols;
  MatrixXd z;
  MatrixXd pooled;
  std::vector<int> pick;  // 0/1 offset of the max inside each pooling pair, (f, j) col-major
};

struct DenseCache {
  VectorXd in;
  VectorXd z;
  VectorXd mask;  // empty when dropout is inactive
};

struct Cache {
  std::array<ConvCache, kConvLayers> conv;
  std::array<DenseCache, kDenseLayers> dense;
  std::array<double, 2> probs = {0.5, 0.5};
};

MatrixXd im2col(const MatrixXd& x, int k) {
  const Eigen::Index C = x.rows();
  const Eigen::Index L = x.cols();
  const int pad = k / 2;
  MatrixXd cols = MatrixXd::Zero(C * k, L);
  for (Eigen::Index c = 0; c < C; ++c) {
    for (int t = 0; t < k; ++t) {
      const Eigen::Index shift = t - pad;
      const Eigen::Index lo = std::max<Eigen::Index>(0, -shift);
      const Eigen::Index hi = std::min<Eigen::Index>(L, L - shift);
      if (hi > lo) cols.row(c * k + t).segment(lo, hi - lo) = x.row(c).segment(lo + shift, hi - lo);
    }
  }
  return cols;
}

void col2im_add(const MatrixXd& dcols, int k, MatrixXd& dx) {
  const Eigen::Index C = dx.rows();
  const Eigen::Index L = dx.cols();
  const int pad = k / 2;
  for (Eigen::Index c = 0; c < C; ++c) {
    for (int t = 0; t < k; ++t) {
      const Eigen::Index shift = t - pad;
      const Eigen::Index lo = std::max<Eigen::Index>(0, -shift);
      const Eigen::Index hi = std::min<Eigen::Index>(L, L - shift);
      if (hi > lo) dx.row(c).segment(lo + shift, hi - lo) += dcols.row(c * k + t).segment(lo, hi - lo);
    }
  }
}

std::array<double, 2> softmax2(double a, double b) {
  const double m = std::max(a, b);
  const double ea = std::exp(a - m);
  const double eb = std::exp(b - m);
  return {ea / (ea + eb), eb / (ea + eb)};
}

std::array<double, 2> forward(const Cnn1d& model, const MatrixXd& input, bool train_mode,
                              std::mt19937_64* rng, Cache& cache) {
  const auto& A = model.arch;
  require(input.rows() == A.in_channels && input.cols() == A.in_length,
          "cnn_forward: input must be in_channels x in_length");
  require(!train_mode || rng != nullptr, "cnn_forward: train mode needs a random generator");
  const auto& P = model.params;

  MatrixXd x = input;
  for (std::size_t i = 0; i < kConvLayers; ++i) {
    auto& c = cache.conv[i];
    c.cols = im2col(x, A.kernel);
    c.z = P[conv_w(i)] * c.cols;
    c.z.colwise() += P[conv_w(i) + 1].col(0);
    const Eigen::Index F = c.z.rows();
    const Eigen::Index Lp = c.z.cols() / 2;
    c.pooled.resize(F, Lp);
    c.pick.assign(static_cast<std::size_t>(F * Lp), 0);
    for (Eigen::Index j = 0; j < Lp; ++j) {
      for (Eigen::Index f = 0; f < F; ++f) {
        const double a0 = std::max(0.0, c.z(f, 2 * j));
        const double a1 = std::max(0.0, c.z(f, 2 * j + 1));
        const bool second = a1 > a0;
        c.pooled(f, j) = second ? a1 : a0;
        c.pick[static_cast<std::size_t>(j * F + f)] = second ? 1 : 0;
      }
    }
    x = c.pooled;
  }

  // Flatten channel-major: index f * L + l.
  const auto& last = cache.conv[kConvLayers - 1].pooled;
  VectorXd h(last.size());
  for (Eigen::Index f = 0; f < last.rows(); ++f) {
    for (Eigen::Index l = 0; l < last.cols(); ++l) h(f * last.cols() + l) = last(f, l);
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t j = 0; j < kDenseLayers; ++j) {
    auto& d = cache.dense[j];
    d.in = h;
    d.z = P[dense_w(j)] * h + P[dense_w(j) + 1].col(0);
    if (j + 1 == kDenseLayers) break;
    h = d.z.cwiseMax(0.0);
    d.mask.resize(0);
    if (train_mode && j < 2 && A.dropout > 0) {
      d.mask.resize(h.size());
      const double keep = 1.0 - A.dropout;
      for (Eigen::Index i = 0; i < h.size(); ++i) d.mask(i) = unit(*rng) >= A.dropout ? 1.0 / keep : 0.0;
      h = h.cwiseProduct(d.mask);
    }
  }
  const auto& logits = cache.dense[kDenseLayers - 1].z;
  cache.probs = softmax2(logits(0), logits(1));
  return cache.probs;
}

}  // namespace

void validate(const CnnArch& a) {
  require(a.in_channels >= 1 && a.in_length >= 8, "cnn: need at least 1 channel and 8 samples");
  require(a.kernel >= 1 && a.kernel % 2 == 1, "cnn: kernel must be odd");
  for (int f : a.filters) require(f >= 1, "cnn: filter counts must be >= 1");
  for (int h : a.hidden) require(h >= 1, "cnn: hidden widths must be >= 1");
  require(a.n_classes == 2, "cnn: binary output only");
  require(a.dropout >= 0 && a.dropout < 1, "cnn: dropout must lie in [0, 1)");
  require(length_chain(a)[3] >= 1, "cnn: input too short for three pooling stages");
}

std::array<int, 4> length_chain(const CnnArch& a) {
  return {a.in_length, a.in_length / 2, a.in_length / 4, a.in_length / 2 / 2 / 2};
}

std::size_t Cnn1d::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += static_cast<std::size_t>(p.size());
  return n;
}

Cnn1d cnn_init(const CnnArch& arch, std::uint64_t seed) {
  validate(arch);
  Cnn1d m;
  m.arch = arch;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto he = [&](int rows, int cols) {
    MatrixXd w(rows, cols);
    const double sd = std::sqrt(2.0 / static_cast<double>(cols));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = sd * normal(rng);
    }
    return w;
  };
  int in = arch.in_channels;
  for (int f : arch.filters) {
    m.params.push_back(he(f, in * arch.kernel));
    m.params.push_back(MatrixXd::Zero(f, 1));
    in = f;
  }
  const auto chain = length_chain(arch);
  int width = arch.filters[2] * chain[3];
  for (int h : arch.hidden) {
    m.params.push_back(he(h, width));
    m.params.push_back(MatrixXd::Zero(h, 1));
    width = h;
  }
  m.params.push_back(he(arch.n_classes, width));
  m.params.push_back(MatrixXd::Zero(arch.n_classes, 1));
  return m;
}

Gradients zero_gradients(const Cnn1d& model) {
  Gradients g;
  for (const auto& p : model.params) g.push_back(MatrixXd::Zero(p.rows(), p.cols()));
  return g;
}

std::array<double, 2> cnn_forward(const Cnn1d& model, const MatrixXd& input, bool train_mode,
                                  std::mt19937_64* rng) {
  Cache cache;
  return forward(model, input, train_mode, rng, cache);
}

double cnn_backward(const Cnn1d& model, const MatrixXd& input, int target,
                    const FocalLossCfg& loss_cfg, bool train_mode, std::mt19937_64* rng,
                    Gradients& grads) {
  require(grads.size() == model.params.size(), "cnn_backward: gradient layout mismatch");
  Cache cache;
  const auto probs = forward(model, input, train_mode, rng, cache);
  const auto loss = focal_loss(probs, target, loss_cfg);
  const auto& P = model.params;

  VectorXd d(2);
  d << loss.grad_logits[0], loss.grad_logits[1];
  for (std::size_t j = kDenseLayers; j-- > 0;) {
    const auto& c = cache.dense[j];
    if (j + 1 < kDenseLayers) {
      if (c.mask.size() > 0) d = d.cwiseProduct(c.mask);
      d = d.cwiseProduct((c.z.array() > 0).cast<double>().matrix());
    }
    grads[dense_w(j)] += d * c.in.transpose();
    grads[dense_w(j) + 1].col(0) += d;
    d = P[dense_w(j)].transpose() * d;
  }

  const auto& last = cache.conv[kConvLayers - 1].pooled;
  MatrixXd dp(last.rows(), last.cols());
  for (Eigen::Index f = 0; f < last.rows(); ++f) {
    for (Eigen::Index l = 0; l < last.cols(); ++l) dp(f, l) = d(f * last.cols() + l);
  }

  for (std::size_t i = kConvLayers; i-- > 0;) {
    const auto& c = cache.conv[i];
    const Eigen::Index F = c.z.rows();
    MatrixXd dz = MatrixXd::Zero(F, c.z.cols());
    for (Eigen::Index j = 0; j < dp.cols(); ++j) {
      for (Eigen::Index f = 0; f < F; ++f) {
        const Eigen::Index at = 2 * j + c.pick[static_cast<std::size_t>(j * F + f)];
        if (c.z(f, at) > 0) dz(f, at) = dp(f, j);
      }
    }
    grads[conv_w(i)] += dz * c.cols.transpose();
    grads[conv_w(i) + 1].col(0) += dz.rowwise().sum();
    if (i == 0) break;
    const MatrixXd dcols = P[conv_w(i)].transpose() * dz;
    const auto& prev = cache.conv[i - 1].pooled;
    dp = MatrixXd::Zero(prev.rows(), prev.cols());
    col2im_add(dcols, model.arch.kernel, dp);
  }
  return loss.loss;
}

Adam::Adam(const Cnn1d& model, const AdamCfg& cfg) : cfg_(cfg) {
  for (const auto& p : model.params) {
    m_.push_back(MatrixXd::Zero(p.rows(), p.cols()));
    v_.push_back(MatrixXd::Zero(p.rows(), p.cols()));
  }
}

void Adam::step(Cnn1d& model, const Gradients& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < model.params.size(); ++k) {
    m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grads[k];
    v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * grads[k].cwiseAbs2();
    model.params[k].array() -=
        cfg_.lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + cfg_.eps);
  }
}

int cnn_predict(const Cnn1d& model, const MatrixXd& input) {
  const auto p = cnn_forward(model, input, false);
  return p[1] > p[0] ? 1 : 0;
}

namespace {

double mean_loss(const Cnn1d& model, const std::vector<const CnnExample*>& set,
                 const FocalLossCfg& loss) {
  if (set.empty()) return 0.0;
  double total = 0.0;
  for (const auto* e : set) {
    const auto p = cnn_forward(model, e->input, false);
    total += focal_loss(p, e->target, loss).loss;
  }
  return total / static_cast<double>(set.size());
}

CnnTrainResult fit_impl(const std::vector<const CnnExample*>& train,
                        const std::vector<const CnnExample*>& val, const CnnArch& arch,
                        const TrainCfg& cfg) {
  require(cfg.epochs >= 0 && cfg.batch_size >= 1, "cnn_train: epochs >= 0 and batch_size >= 1 required");
  std::size_t counts[2] = {0, 0};
  for (const auto* e : train) {
    require(e->target == 0 || e->target == 1, "cnn_train: targets must be 0 or 1");
    ++counts[e->target];
  }
  if (counts[0] == 0 || counts[1] == 0) throw_degenerate("cnn_train: a class is missing from the training split");

  CnnTrainResult out;
  out.model = cnn_init(arch, derive_seed(cfg.seed, 1));
  FocalLossCfg loss;
  loss.alpha = inverse_frequency_alpha(counts[0], counts[1]);
  loss.gamma_focus = cfg.gamma_focus;
  out.report.alpha = loss.alpha;
  out.report.n_train = train.size();
  out.report.n_val = val.size();

  Adam adam(out.model, cfg.adam);
  std::mt19937_64 order_rng(derive_seed(cfg.seed, 2));
  std::mt19937_64 drop_rng(derive_seed(cfg.seed, 3));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  auto grads = zero_gradients(out.model);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      for (auto& g : grads) g.setZero();
      for (std::size_t i = b; i < e; ++i) {
        const auto* ex = train[order[i]];
        total += cnn_backward(out.model, ex->input, ex->target, loss, true, &drop_rng, grads);
      }
      const double scale = 1.0 / static_cast<double>(e - b);
      for (auto& g : grads) g *= scale;
      adam.step(out.model, grads);
    }
    out.report.train_loss.push_back(total / static_cast<double>(train.size()));
    if (!val.empty()) out.report.val_loss.push_back(mean_loss(out.model, val, loss));
  }
  return out;
}

}  // namespace

CnnTrainResult cnn_fit(const std::vector<CnnExample>& train, const CnnArch& arch,
                       const TrainCfg& cfg) {
  std::vector<const CnnExample*> t;
  for (const auto& e : train) t.push_back(&e);
  return fit_impl(t, {}, arch, cfg);
}

CnnTrainResult cnn_train(const std::vector<CnnExample>& data, const CnnArch& arch,
                         const TrainCfg& cfg) {
  require(cfg.test_fraction >= 0 && cfg.test_fraction < 1 && cfg.val_fraction >= 0 &&
              cfg.val_fraction < 1,
          "cnn_train: split fractions must lie in [0, 1)");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(derive_seed(cfg.seed, 0));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(data.size())));
  const auto n_val = static_cast<std::size_t>(
      std::llround(cfg.val_fraction * static_cast<double>(data.size() - n_test)));
  std::vector<const CnnExample*> test, val, train;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto* e = &data[idx[i]];
    if (i < n_test) test.push_back(e);
    else if (i < n_test + n_val) val.push_back(e);
    else train.push_back(e);
  }
  auto out = fit_impl(train, val, arch, cfg);
  out.report.n_test = test.size();
  for (const auto* e : test) {
    ++out.report.test_confusion[static_cast<std::size_t>(e->target)]
                               [static_cast<std::size_t>(cnn_predict(out.model, e->input))];
  }
  return out;
}

}  // namespace earpipe::models
