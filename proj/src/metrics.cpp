#include "earpipe/metrics.hpp"

#include "earpipe/error.hpp"

namespace earpipe {
namespace {

double ratio(long num, long den) {
  return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

ClassScores scores(long tp, long fp, long fn) {
  ClassScores s;
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  const double sum = s.precision + s.recall;
  s.f1 = sum > 0 ? 2.0 * s.precision * s.recall / sum : 0.0;
  return s;
}

}  // namespace

void Confusion::add(EpochLabel truth, EpochLabel predicted) {
  const bool t = truth == EpochLabel::Seizure;
  const bool p = predicted == EpochLabel::Seizure;
  if (t && p) ++tp;
  else if (t) ++fn;
  else if (p) ++fp;
  else ++tn;
}

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

Confusion confusion(const std::vector<EpochLabel>& truth, const std::vector<EpochLabel>& predicted) {
  require(truth.size() == predicted.size(), "confusion: label vectors differ in length");
  Confusion cm;
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

Metrics compute_metrics(const Confusion& cm) {
  Metrics m;
  m.cm = cm;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.seizure = scores(cm.tp, cm.fp, cm.fn);
  m.non_seizure = scores(cm.tn, cm.fn, cm.fp);
  m.seizure_rate = m.seizure.recall;
  m.non_seizure_rate = m.non_seizure.recall;
  return m;
}

nlohmann::json to_json(const Metrics& m) {
  auto cls = [](const ClassScores& s) {
    return nlohmann::json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  };
  return {{"confusion", {{"tp", m.cm.tp}, {"fp", m.cm.fp}, {"tn", m.cm.tn}, {"fn", m.cm.fn}}},
          {"accuracy", m.accuracy},
          {"seizure", cls(m.seizure)},
          {"non_seizure", cls(m.non_seizure)},
          {"seizure_detection_rate", m.seizure_rate},
          {"non_seizure_rate", m.non_seizure_rate}};
}

}  // namespace earpipe
