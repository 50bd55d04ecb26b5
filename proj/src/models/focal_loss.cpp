#include "earpipe/models/focal_loss.hpp"

#include <cmath>

#include "earpipe/error.hpp"

namespace earpipe::models {

std::array<double, 2> inverse_frequency_alpha(std::size_t count0, std::size_t count1) {
  require(count0 > 0 && count1 > 0, "focal loss: both classes need at least one sample");
  const double w0 = 1.0 / static_cast<double>(count0);
  const double w1 = 1.0 / static_cast<double>(count1);
  return {w0 / (w0 + w1), w1 / (w0 + w1)};
}

double focal_loss_value(double p_t, double alpha, double gamma_focus, double eps) {
  const double p = std::max(p_t, eps);
  require(p > 0, "focal loss: p_t must be positive after flooring");
  return alpha * std::pow(1.0 - p_t, gamma_focus) * -std::log(p);
}

FocalResult focal_loss(const std::array<double, 2>& probs, int target, const FocalLossCfg& cfg) {
  require(target == 0 || target == 1, "focal loss: target must be 0 or 1");
  require(std::abs(probs[0] + probs[1] - 1.0) < 1e-6, "focal loss: probabilities must sum to 1");
  const auto t = static_cast<std::size_t>(target);
  const double pt = probs[t];
  const double a = cfg.alpha[t];
  const double g = cfg.gamma_focus;
  FocalResult r;
  r.loss = focal_loss_value(pt, a, g, cfg.eps);

  // dL/dp_t, then through the softmax: dp_t/dz_j = p_t (delta_tj - p_j).
  const double q = 1.0 - pt;
  const double logp = std::log(std::max(pt, cfg.eps));
  double focus_term = 0.0;
  if (g != 0.0 && q > 0.0) focus_term = g * std::pow(q, g - 1.0) * logp;
  const double log_term = pt > cfg.eps ? std::pow(q, g) / pt : 0.0;
  const double dl_dpt = a * (focus_term - log_term);
  for (std::size_t j = 0; j < 2; ++j) {
    r.grad_logits[j] = dl_dpt * pt * ((j == t ? 1.0 : 0.0) - probs[j]);
  }
  return r;
}

}  // namespace earpipe::models
