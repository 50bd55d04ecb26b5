#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "earpipe/error.hpp"
#include "earpipe/models/cnn.hpp"
#include "earpipe/models/focal_loss.hpp"

using namespace earpipe::models;

namespace {

CnnArch tiny_arch() {
  CnnArch a;
  a.in_channels = 2;
  a.in_length = 64;
  a.filters = {2, 2, 2};
  a.hidden = {4, 4, 4};
  return a;
}

Eigen::MatrixXd random_input(std::uint64_t seed, int rows, int cols) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

double loss_of(const Cnn1d& net, const Eigen::MatrixXd& x, int target, const FocalLossCfg& loss,
               bool train_mode, std::uint64_t dropout_seed) {
  std::mt19937_64 rng(dropout_seed);
  return focal_loss(cnn_forward(net, x, train_mode, &rng), target, loss).loss;
}

// Central differences against the analytic gradient of every tensor.
double worst_gradient_error(const Cnn1d& net, const Eigen::MatrixXd& x, int target,
                            const FocalLossCfg& loss, bool train_mode) {
  constexpr std::uint64_t kDropoutSeed = 77;
  auto grads = zero_gradients(net);
  std::mt19937_64 rng(kDropoutSeed);
  cnn_backward(net, x, target, loss, train_mode, &rng, grads);
  const double h = 1e-4;
  double worst = 0;
  Cnn1d probe = net;
  for (std::size_t t = 0; t < probe.params.size(); ++t) {
    for (Eigen::Index i = 0; i < probe.params[t].size(); ++i) {
      double& w = probe.params[t].data()[i];
      const double keep = w;
      w = keep + h;
      const double up = loss_of(probe, x, target, loss, train_mode, kDropoutSeed);
      w = keep - h;
      const double down = loss_of(probe, x, target, loss, train_mode, kDropoutSeed);
      w = keep;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[t].data()[i];
      const double err = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

std::vector<CnnExample> separable_set(std::uint64_t seed, int n, const CnnArch& arch) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 0.3);
  std::vector<CnnExample> out;
  for (int i = 0; i < n; ++i) {
    CnnExample e{Eigen::MatrixXd(arch.in_channels, arch.in_length), i % 2};
    for (Eigen::Index c = 0; c < e.input.rows(); ++c) {
      for (Eigen::Index t = 0; t < e.input.cols(); ++t) {
        const double carrier = e.target == 1 ? std::sin(0.8 * static_cast<double>(t)) : std::sin(0.1 * static_cast<double>(t));
        e.input(c, t) = carrier + g(rng);
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

TEST_CASE("length chain of the full network") {
  const auto chain = length_chain(CnnArch{});
  CHECK(chain == std::array<int, 4>{2500, 1250, 625, 312});
}

TEST_CASE("softmax output sums to one") {
  const auto net = cnn_init(CnnArch{}, 1);
  const auto x = random_input(2, 6, 2500);
  const auto p = cnn_forward(net, x, false);
  CHECK(std::abs(p[0] + p[1] - 1.0) < 1e-9);
  CHECK(p[0] > 0);
  CHECK(p[1] > 0);
  CHECK(net.params.size() == Cnn1d::kTensorCount);
}

TEST_CASE("evaluation mode is deterministic") {
  const auto net = cnn_init(tiny_arch(), 3);
  const auto x = random_input(4, 2, 64);
  CHECK(cnn_forward(net, x, false) == cnn_forward(net, x, false));
}

TEST_CASE("analytic gradients match finite differences") {
  const auto arch = tiny_arch();
  auto net = cnn_init(arch, 5);
  // Nonzero biases keep every ReLU away from its kink when a whole layer is dropped.
  for (std::size_t t = 1; t < net.params.size(); t += 2) net.params[t] = 0.1 * random_input(40 + t, static_cast<int>(net.params[t].rows()), 1);
  FocalLossCfg loss;
  loss.alpha = {0.3, 0.7};
  for (int target : {0, 1}) {
    const auto x = random_input(6 + static_cast<std::uint64_t>(target), 2, 64);
    CHECK(worst_gradient_error(net, x, target, loss, false) < 1e-4);
    CHECK(worst_gradient_error(net, x, target, loss, true) < 1e-4);
  }
}

TEST_CASE("focal loss values") {
  CHECK(focal_loss_value(1.0, 1.0, 2.0) == 0.0);
  CHECK(focal_loss_value(0.5, 1.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(focal_loss_value(0.5, 1.0, 2.0) == doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("focal gradient matches finite differences on the logits") {
  FocalLossCfg cfg;
  cfg.alpha = {0.25, 0.75};
  for (double z : {-2.0, -0.3, 0.0, 1.1, 3.0}) {
    const auto probs = [](double d) {
      const double p1 = 1.0 / (1.0 + std::exp(-d));
      return std::array<double, 2>{1.0 - p1, p1};
    };
    for (int target : {0, 1}) {
      const auto r = focal_loss(probs(z), target, cfg);
      const double h = 1e-6;
      // d/dz1 with z0 fixed; the logit difference is z = z1 - z0.
      const double numeric = (focal_loss(probs(z + h), target, cfg).loss - focal_loss(probs(z - h), target, cfg).loss) / (2 * h);
      CHECK(r.grad_logits[1] == doctest::Approx(numeric).epsilon(1e-6));
      CHECK(r.grad_logits[0] == doctest::Approx(-numeric).epsilon(1e-6));
    }
  }
}

TEST_CASE("class weights are inversely proportional to counts") {
  const auto a = inverse_frequency_alpha(10, 30);
  CHECK(a[0] == doctest::Approx(0.75));
  CHECK(a[1] == doctest::Approx(0.25));
}

TEST_CASE("training drives the loss down and is reproducible") {
  auto arch = tiny_arch();
  arch.filters = {4, 8, 8};
  arch.hidden = {32, 32, 16};
  const auto data = separable_set(8, 200, arch);
  TrainCfg cfg;
  cfg.epochs = 50;
  cfg.batch_size = 16;
  cfg.adam.lr = 1e-2;
  cfg.seed = 9;
  const auto a = cnn_fit(data, arch, cfg);
  REQUIRE(a.report.train_loss.size() == 50);
  CHECK(a.report.train_loss.back() <= 0.1 * a.report.train_loss.front());
  const auto b = cnn_fit(data, arch, cfg);
  CHECK(a.model.params == b.model.params);
  int correct = 0;
  for (const auto& e : data) correct += cnn_predict(a.model, e.input) == e.target;
  CHECK(correct >= 195);
}

TEST_CASE("split training reports every partition") {
  const auto arch = tiny_arch();
  const auto data = separable_set(10, 100, arch);
  TrainCfg cfg;
  cfg.epochs = 5;
  const auto r = cnn_train(data, arch, cfg);
  CHECK(r.report.n_test == 20);
  CHECK(r.report.n_val == 16);
  CHECK(r.report.n_train == 64);
  long total = 0;
  for (const auto& row : r.report.test_confusion) total += row[0] + row[1];
  CHECK(total == 20);
  CHECK(r.report.val_loss.size() == 5);
}

TEST_CASE("shape and class errors") {
  const auto net = cnn_init(tiny_arch(), 1);
  CHECK_THROWS_AS(cnn_forward(net, random_input(1, 3, 64), false), earpipe::Error);
  auto one_class = separable_set(11, 10, tiny_arch());
  for (auto& e : one_class) e.target = 1;
  CHECK_THROWS_AS(cnn_fit(one_class, tiny_arch(), {}), earpipe::Error);
}
