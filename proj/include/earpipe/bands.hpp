#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string_view>

namespace earpipe {

// Frequency ranges of the signals picked up behind the ear.
enum class BandName { Delta, Theta, Alpha, Beta, Gamma, Eeg, Eog, Emg };

struct Band {
  BandName name;
  std::string_view label;
  double lo_hz;
  double hi_hz;  // +inf for open-ended bands

  // Clamp the open end to the Nyquist frequency of a given sample rate.
  constexpr double hi_clamped(double sample_rate) const {
    return hi_hz < sample_rate / 2 ? hi_hz : sample_rate / 2;
  }
};

inline constexpr double kOpenEnded = std::numeric_limits<double>::infinity();

inline constexpr std::array<Band, 8> kBands = {{
    {BandName::Delta, "delta", 0.0, 3.0},
    {BandName::Theta, "theta", 3.0, 8.0},
    {BandName::Alpha, "alpha", 8.0, 12.0},
    {BandName::Beta, "beta", 12.0, 25.0},
    {BandName::Gamma, "gamma", 25.0, kOpenEnded},
    {BandName::Eeg, "eeg", 3.0, 25.0},
    {BandName::Eog, "eog", 0.3, 10.0},
    {BandName::Emg, "emg", 10.0, 100.0},
}};

constexpr const Band& band(BandName name) { return kBands[static_cast<std::size_t>(name)]; }

constexpr std::optional<Band> find_band(std::string_view label) {
  for (const auto& b : kBands) {
    if (b.label == label) return b;
  }
  return std::nullopt;
}

static_assert(band(BandName::Alpha).lo_hz == 8.0 && band(BandName::Alpha).hi_hz == 12.0);

}  // namespace earpipe
