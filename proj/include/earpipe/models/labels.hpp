#pragma once

#include <vector>

#include "earpipe/segment.hpp"

// The one place where epoch labels become numeric targets:
// class ids {0 = non_seizure, 1 = seizure} and SVM signs {-1, +1}.
namespace earpipe::models {

inline int to_class(EpochLabel l) { return l == EpochLabel::Seizure ? 1 : 0; }
inline EpochLabel from_class(int c) { return c == 1 ? EpochLabel::Seizure : EpochLabel::NonSeizure; }

inline double to_sign(EpochLabel l) { return l == EpochLabel::Seizure ? 1.0 : -1.0; }
// A decision value of exactly zero maps to non_seizure.
inline EpochLabel from_sign(double v) { return v > 0 ? EpochLabel::Seizure : EpochLabel::NonSeizure; }

std::vector<int> to_classes(const std::vector<EpochLabel>& labels);
std::vector<double> to_signs(const std::vector<EpochLabel>& labels);

// Throws unless both classes occur.
void require_both_classes(const std::vector<EpochLabel>& labels, const char* who);

}  // namespace earpipe::models
