#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "earpipe/recording.hpp"

namespace earpipe {

struct WindowSpec {
  double window_s = kMinEventSeconds;
  int stride_s = 1;
};

void validate(const WindowSpec& spec);

enum class EpochLabel { NonSeizure = 0, Seizure = 1 };

std::string_view to_string(EpochLabel label);

// Window position inside a recording; the samples are not copied.
struct EpochSpan {
  std::size_t first_sample = 0;
  double start_s = 0.0;
  EpochLabel label = EpochLabel::NonSeizure;
};

struct LabeledEpoch {
  std::string patient_id;
  double start_s = 0.0;
  std::array<Signal, 6> channels;  // kSeparatedRoles order
  EpochLabel label = EpochLabel::NonSeizure;
};

// floor((duration - window) / stride) + 1, or 0 when the recording is shorter
// than one window. Counted in whole samples.
std::size_t window_count(std::size_t n_samples, double sample_rate, const WindowSpec& spec);

// Seizure iff [start, end] lies inside a single annotation.
EpochLabel label_window(double start_s, double end_s,
                        const std::vector<SeizureAnnotation>& annotations);

std::vector<EpochSpan> epoch_spans(const Recording& rec, const WindowSpec& spec);

// Requires the six separated channels.
std::vector<LabeledEpoch> segment(const Recording& rec, const WindowSpec& spec = {});

// Seizure : non-seizure ratio 1 : non_seizure_per_seizure.
struct BalanceSpec {
  int non_seizure_per_seizure = 1;
  std::uint64_t rng_seed = 0;
};

// Parses "1:1", "1:2", "1:3" (any "1:k" with k >= 1).
BalanceSpec parse_ratio(std::string_view text, std::uint64_t seed = 0);
std::string ratio_string(const BalanceSpec& spec);

// Indices kept after balancing, ascending. The seizure count is
// min(#seizure, floor(#non_seizure / k)) and the non-seizure count k times
// that; whichever class limits the ratio keeps every one of its members.
std::vector<std::size_t> balance_indices(const std::vector<EpochLabel>& labels,
                                         const BalanceSpec& spec);

std::vector<LabeledEpoch> balance(const std::vector<LabeledEpoch>& epochs,
                                  const BalanceSpec& spec);

}  // namespace earpipe
