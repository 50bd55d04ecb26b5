#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "earpipe/models/focal_loss.hpp"

namespace earpipe::models {

struct CnnArch {
  int in_channels = 6;
  int in_length = 2500;
  std::array<int, 3> filters = {32, 64, 128};
  int kernel = 3;  // stride 1, padding kernel / 2
  std::array<int, 3> hidden = {128, 128, 64};
  int n_classes = 2;
  double dropout = 0.5;  // after the first two hidden layers

  bool operator==(const CnnArch&) const = default;
};

void validate(const CnnArch& arch);

// Sequence length entering each conv block and leaving the last pool.
std::array<int, 4> length_chain(const CnnArch& arch);

// Parameters in order: conv{1,2,3} weight and bias, then hidden{1,2,3} and the
// output layer, each weight and bias. Biases are single-column matrices. Conv
// weights are filters x (in_channels * kernel), channel-major.
struct Cnn1d {
  CnnArch arch;
  std::vector<Eigen::MatrixXd> params;

  static constexpr std::size_t kTensorCount = 14;

  std::size_t parameter_count() const;
};

// He-normal weights, zero biases.
Cnn1d cnn_init(const CnnArch& arch, std::uint64_t seed);

using Gradients = std::vector<Eigen::MatrixXd>;
Gradients zero_gradients(const Cnn1d& model);

// Input is in_channels x in_length. With train_mode set, dropout masks are drawn
// from `rng` (required in that case).
std::array<double, 2> cnn_forward(const Cnn1d& model, const Eigen::MatrixXd& input,
                                  bool train_mode, std::mt19937_64* rng = nullptr);

// Forward + focal loss + backward for one example. Gradients are added into
// `grads`; returns the loss.
double cnn_backward(const Cnn1d& model, const Eigen::MatrixXd& input, int target,
                    const FocalLossCfg& loss, bool train_mode, std::mt19937_64* rng,
                    Gradients& grads);

struct AdamCfg {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const Cnn1d& model, const AdamCfg& cfg);
  void step(Cnn1d& model, const Gradients& grads);

 private:
  AdamCfg cfg_;
  std::vector<Eigen::MatrixXd> m_;
  std::vector<Eigen::MatrixXd> v_;
  long t_ = 0;
};

struct TrainCfg {
  AdamCfg adam;
  int epochs = 350;
  int batch_size = 32;
  double test_fraction = 0.2;
  double val_fraction = 0.2;  // of the remaining training part
  double gamma_focus = 2.0;
  std::uint64_t seed = 0;
};

struct CnnExample {
  Eigen::MatrixXd input;
  int target = 0;
};

struct TrainReport {
  std::vector<double> train_loss;  // mean per epoch
  std::vector<double> val_loss;
  std::array<double, 2> alpha = {0.5, 0.5};
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  // Confusion on the held-out test split: [true class][predicted class].
  std::array<std::array<long, 2>, 2> test_confusion = {{{0, 0}, {0, 0}}};
};

struct CnnTrainResult {
  Cnn1d model;
  TrainReport report;
};

// Seeded shuffle, then test_fraction held out for testing and val_fraction of
// the rest for validation. Focal-loss alpha comes from the training split.
CnnTrainResult cnn_train(const std::vector<CnnExample>& data, const CnnArch& arch,
                         const TrainCfg& cfg);

// Trains on every example (no internal split); used inside cross-validation.
CnnTrainResult cnn_fit(const std::vector<CnnExample>& train, const CnnArch& arch,
                       const TrainCfg& cfg);

int cnn_predict(const Cnn1d& model, const Eigen::MatrixXd& input);

}  // namespace earpipe::models
