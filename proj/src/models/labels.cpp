#include "earpipe/models/labels.hpp"

#include <algorithm>
#include <string>

#include "earpipe/error.hpp"

namespace earpipe::models {

std::vector<int> to_classes(const std::vector<EpochLabel>& labels) {
  std::vector<int> out(labels.size());
  std::transform(labels.begin(), labels.end(), out.begin(), to_class);
  return out;
}

std::vector<double> to_signs(const std::vector<EpochLabel>& labels) {
  std::vector<double> out(labels.size());
  std::transform(labels.begin(), labels.end(), out.begin(), to_sign);
  return out;
}

void require_both_classes(const std::vector<EpochLabel>& labels, const char* who) {
  const bool has_seizure = std::count(labels.begin(), labels.end(), EpochLabel::Seizure) > 0;
  const bool has_normal = std::count(labels.begin(), labels.end(), EpochLabel::NonSeizure) > 0;
  if (!has_seizure || !has_normal) {
    throw_degenerate(std::string(who) + ": training data must contain both classes");
  }
}

}  // namespace earpipe::models
