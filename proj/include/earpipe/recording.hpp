#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace earpipe {

using Signal = std::vector<double>;

inline constexpr double kDefaultSampleRate = 250.0;
inline constexpr double kDefaultImuRate = 50.0;
// Minimum seizure duration (ACNS) and detection window length.
inline constexpr double kMinEventSeconds = 10.0;

enum class ChannelRole {
  MixedLeft,
  MixedRight,
  EegLeft,
  EegRight,
  EmgLeft,
  EmgRight,
  EogLeft,
  EogRight,
  AccelX,
  AccelY,
  AccelZ,
};

std::string_view to_string(ChannelRole role);
std::optional<ChannelRole> parse_role(std::string_view name);

// Canonical order of the separated channels; feature vectors follow it.
inline constexpr std::array<ChannelRole, 6> kSeparatedRoles = {
    ChannelRole::EegLeft, ChannelRole::EegRight, ChannelRole::EmgLeft,
    ChannelRole::EmgRight, ChannelRole::EogLeft, ChannelRole::EogRight};

struct Channel {
  ChannelRole role;
  Signal samples;  // millivolts

  bool operator==(const Channel&) const = default;
};

// 3-axis acceleration in g.
struct ImuSeries {
  double sample_rate = kDefaultImuRate;
  std::array<Signal, 3> axes;

  std::size_t size() const { return axes[0].size(); }
  bool empty() const { return axes[0].empty(); }
  Signal magnitude() const;

  bool operator==(const ImuSeries&) const = default;
};

struct SeizureAnnotation {
  double onset = 0.0;   // seconds
  double offset = 0.0;  // seconds
  std::string seizure_type;

  double duration() const { return offset - onset; }
  bool operator==(const SeizureAnnotation&) const = default;
};

struct Recording {
  std::string patient_id;
  double sample_rate = kDefaultSampleRate;
  std::vector<Channel> channels;
  ImuSeries imu;
  std::vector<SeizureAnnotation> annotations;
  double start_time = 0.0;

  std::size_t length() const { return channels.empty() ? 0 : channels.front().samples.size(); }
  double duration() const { return static_cast<double>(length()) / sample_rate; }

  bool has(ChannelRole role) const;
  const Signal& channel(ChannelRole role) const;  // throws when absent
  Signal& channel(ChannelRole role);

  bool is_separated() const;

  bool operator==(const Recording&) const = default;
};

struct ValidationOptions {
  // Annotations shorter than 10 s are rejected unless this is set.
  bool allow_short_events = false;
};

// Throws Error(Parameter) naming the first violated invariant.
void validate(const Recording& rec, const ValidationOptions& opts = {});

enum class PayloadFormat { Binary, Csv };

// Binary: `path` is a single container file. Csv: `path` is a directory holding
// header.json, channels.csv and (when IMU data exist) imu.csv.
void save_recording(const Recording& rec, const std::filesystem::path& path,
                    PayloadFormat format = PayloadFormat::Binary);

// Detects the form from the path (directory => CSV).
Recording load_recording(const std::filesystem::path& path, const ValidationOptions& opts = {});

}  // namespace earpipe
