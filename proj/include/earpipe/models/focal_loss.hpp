#pragma once

#include <array>
#include <cstddef>

namespace earpipe::models {

struct FocalLossCfg {
  std::array<double, 2> alpha = {0.5, 0.5};  // per class id
  double gamma_focus = 2.0;
  double eps = 1e-12;  // floor applied to p_t inside the log
};

// alpha_c proportional to 1 / count_c, normalized to sum 1.
std::array<double, 2> inverse_frequency_alpha(std::size_t count0, std::size_t count1);

// alpha (1 - p_t)^gamma (-log p_t)
double focal_loss_value(double p_t, double alpha, double gamma_focus, double eps = 1e-12);

struct FocalResult {
  double loss = 0.0;
  std::array<double, 2> grad_logits = {0.0, 0.0};
};

// Probabilities must come from a softmax; the gradient is taken with respect
// to the logits that produced them.
FocalResult focal_loss(const std::array<double, 2>& probs, int target, const FocalLossCfg& cfg);

}  // namespace earpipe::models
