#pragma once

#include <vector>

#include <json.hpp>

#include "earpipe/segment.hpp"

namespace earpipe {

// Seizure is the positive class.
struct Confusion {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long total() const { return tp + fp + tn + fn; }
  void add(EpochLabel truth, EpochLabel predicted);
  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

Confusion confusion(const std::vector<EpochLabel>& truth, const std::vector<EpochLabel>& predicted);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;  // 0 when precision and recall are both 0
};

// Ratios with an empty denominator are reported as 0.
struct Metrics {
  Confusion cm;
  double accuracy = 0.0;
  ClassScores seizure;
  ClassScores non_seizure;
  double seizure_rate = 0.0;      // TP / (TP + FN)
  double non_seizure_rate = 0.0;  // TN / (TN + FP)
};

Metrics compute_metrics(const Confusion& cm);

nlohmann::json to_json(const Metrics& m);

}  // namespace earpipe
