#include "earpipe/segment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

#include "earpipe/error.hpp"

namespace earpipe {

void validate(const WindowSpec& spec) {
  require(spec.window_s == kMinEventSeconds, "segment: window length is fixed at 10 s");
  require(spec.stride_s >= 1 && spec.stride_s <= 9, "segment: stride must be 1..9 s");
}

std::string_view to_string(EpochLabel label) {
  return label == EpochLabel::Seizure ? "seizure" : "non_seizure";
}

std::size_t window_count(std::size_t n_samples, double sample_rate, const WindowSpec& spec) {
  validate(spec);
  const auto win = static_cast<std::size_t>(std::llround(spec.window_s * sample_rate));
  const auto stride = static_cast<std::size_t>(std::llround(spec.stride_s * sample_rate));
  if (n_samples < win) return 0;
  return (n_samples - win) / stride + 1;
}

EpochLabel label_window(double start_s, double end_s,
                        const std::vector<SeizureAnnotation>& annotations) {
  for (const auto& a : annotations) {
    if (a.onset <= start_s && end_s <= a.offset) return EpochLabel::Seizure;
  }
  return EpochLabel::NonSeizure;
}

std::vector<EpochSpan> epoch_spans(const Recording& rec, const WindowSpec& spec) {
  const std::size_t count = window_count(rec.length(), rec.sample_rate, spec);
  require(count > 0, "segment: recording is shorter than one 10 s window");
  const auto stride = static_cast<std::size_t>(std::llround(spec.stride_s * rec.sample_rate));
  std::vector<EpochSpan> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    EpochSpan s;
    s.first_sample = i * stride;
    s.start_s = static_cast<double>(i) * spec.stride_s;
    s.label = label_window(s.start_s, s.start_s + spec.window_s, rec.annotations);
    out.push_back(s);
  }
  return out;
}

std::vector<LabeledEpoch> segment(const Recording& rec, const WindowSpec& spec) {
  for (auto role : kSeparatedRoles) {
    require(rec.has(role), "segment: separated channel " + std::string(to_string(role)) + " missing");
  }
  const auto win = static_cast<std::size_t>(std::llround(spec.window_s * rec.sample_rate));
  std::vector<LabeledEpoch> out;
  for (const auto& span : epoch_spans(rec, spec)) {
    LabeledEpoch e;
    e.patient_id = rec.patient_id;
    e.start_s = span.start_s;
    e.label = span.label;
    for (std::size_t c = 0; c < kSeparatedRoles.size(); ++c) {
      const auto& src = rec.channel(kSeparatedRoles[c]);
      e.channels[c].assign(src.begin() + static_cast<std::ptrdiff_t>(span.first_sample),
                           src.begin() + static_cast<std::ptrdiff_t>(span.first_sample + win));
    }
    out.push_back(std::move(e));
  }
  return out;
}

BalanceSpec parse_ratio(std::string_view text, std::uint64_t seed) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || text.substr(0, colon) != "1") {
    throw_parameter("balance: ratio must look like 1:k, got '" + std::string(text) + "'");
  }
  const auto rest = text.substr(colon + 1);
  int k = 0;
  const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), k);
  if (ec != std::errc{} || ptr != rest.data() + rest.size() || k < 1) {
    throw_parameter("balance: ratio must look like 1:k, got '" + std::string(text) + "'");
  }
  return BalanceSpec{k, seed};
}

std::string ratio_string(const BalanceSpec& spec) {
  return "1:" + std::to_string(spec.non_seizure_per_seizure);
}

std::vector<std::size_t> balance_indices(const std::vector<EpochLabel>& labels,
                                         const BalanceSpec& spec) {
  require(spec.non_seizure_per_seizure >= 1, "balance: ratio must be 1:k with k >= 1");
  std::vector<std::size_t> seizure;
  std::vector<std::size_t> normal;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == EpochLabel::Seizure ? seizure : normal).push_back(i);
  }
  if (seizure.empty() || normal.empty()) {
    throw_degenerate("balance: both classes must be present");
  }
  const auto k = static_cast<std::size_t>(spec.non_seizure_per_seizure);
  const std::size_t n_seizure = std::min(seizure.size(), normal.size() / k);
  if (n_seizure == 0) throw_degenerate("balance: too few non-seizure epochs for ratio 1:" + std::to_string(k));
  const std::size_t n_normal = n_seizure * k;

  std::mt19937_64 rng(spec.rng_seed);
  auto pick = [&rng](std::vector<std::size_t>& pool, std::size_t count) {
    if (count < pool.size()) {
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(count);
    }
  };
  pick(seizure, n_seizure);
  pick(normal, n_normal);
  std::vector<std::size_t> out = seizure;
  out.insert(out.end(), normal.begin(), normal.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<LabeledEpoch> balance(const std::vector<LabeledEpoch>& epochs, const BalanceSpec& spec) {
  std::vector<EpochLabel> labels;
  labels.reserve(epochs.size());
  for (const auto& e : epochs) labels.push_back(e.label);
  std::vector<LabeledEpoch> out;
  for (auto i : balance_indices(labels, spec)) out.push_back(epochs[i]);
  return out;
}

}  // namespace earpipe
