#include "earpipe/recording.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "earpipe/container.hpp"
#include "earpipe/error.hpp"

namespace earpipe {
namespace {

constexpr std::array<std::string_view, 11> kRoleNames = {
    "MixedLeft", "MixedRight", "EegLeft", "EegRight", "EmgLeft", "EmgRight",
    "EogLeft",   "EogRight",   "AccelX",  "AccelY",  "AccelZ"};

constexpr std::string_view kFormatTag = "earpipe.recording";
constexpr int kFormatVersion = 1;

bool is_accel(ChannelRole role) {
  return role == ChannelRole::AccelX || role == ChannelRole::AccelY ||
         role == ChannelRole::AccelZ;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

nlohmann::json make_header(const Recording& rec, PayloadFormat format) {
  nlohmann::json h;
  h["format"] = kFormatTag;
  h["version"] = kFormatVersion;
  h["patient_id"] = rec.patient_id;
  h["sample_rate"] = rec.sample_rate;
  h["start_time"] = rec.start_time;
  auto roles = nlohmann::json::array();
  auto lengths = nlohmann::json::array();
  for (const auto& ch : rec.channels) {
    roles.push_back(std::string(to_string(ch.role)));
    lengths.push_back(ch.samples.size());
  }
  h["channels"] = roles;
  h["channel_lengths"] = lengths;
  h["imu_rate"] = rec.imu.sample_rate;
  h["imu_lengths"] = {rec.imu.axes[0].size(), rec.imu.axes[1].size(), rec.imu.axes[2].size()};
  auto ann = nlohmann::json::array();
  for (const auto& a : rec.annotations) ann.push_back({a.onset, a.offset, a.seizure_type});
  h["annotations"] = ann;
  h["payload"] = format == PayloadFormat::Binary ? "binary" : "csv";
  return h;
}

struct ParsedHeader {
  Recording rec;  // samples not yet filled
  std::vector<std::size_t> channel_lengths;
  std::array<std::size_t, 3> imu_lengths{};
};

ParsedHeader parse_header(const nlohmann::json& h, const std::string& where) {
  auto fail = [&](const std::string& msg) { throw_parse(where + ": header: " + msg); };
  ParsedHeader out;
  try {
    if (h.value("format", std::string{}) != kFormatTag) fail("format tag is not earpipe.recording");
    if (h.value("version", 0) != kFormatVersion) fail("unsupported version");
    out.rec.patient_id = h.at("patient_id").get<std::string>();
    out.rec.sample_rate = h.at("sample_rate").get<double>();
    out.rec.start_time = h.value("start_time", 0.0);
    const auto& roles = h.at("channels");
    if (!roles.is_array()) fail("channels must be an array");
    for (std::size_t i = 0; i < roles.size(); ++i) {
      const auto name = roles[i].get<std::string>();
      const auto role = parse_role(name);
      if (!role) fail("channels[" + std::to_string(i) + "]: unknown role name '" + name + "'");
      out.rec.channels.push_back({*role, {}});
    }
    out.channel_lengths = h.at("channel_lengths").get<std::vector<std::size_t>>();
    if (out.channel_lengths.size() != out.rec.channels.size()) {
      fail("channel_lengths has " + std::to_string(out.channel_lengths.size()) +
           " entries for " + std::to_string(out.rec.channels.size()) + " channels");
    }
    for (std::size_t i = 1; i < out.channel_lengths.size(); ++i) {
      if (out.channel_lengths[i] != out.channel_lengths[0]) {
        fail("length mismatch: channel " + std::to_string(i) + " has " +
             std::to_string(out.channel_lengths[i]) + " samples, channel 0 has " +
             std::to_string(out.channel_lengths[0]));
      }
    }
    out.rec.imu.sample_rate = h.value("imu_rate", kDefaultImuRate);
    const auto imu_lengths = h.value("imu_lengths", std::vector<std::size_t>{0, 0, 0});
    if (imu_lengths.size() != 3) fail("imu_lengths must have 3 entries");
    if (imu_lengths[0] != imu_lengths[1] || imu_lengths[0] != imu_lengths[2]) {
      fail("length mismatch between IMU axes");
    }
    std::copy(imu_lengths.begin(), imu_lengths.end(), out.imu_lengths.begin());
    for (const auto& a : h.value("annotations", nlohmann::json::array())) {
      if (!a.is_array() || a.size() != 3) fail("annotation rows must be [onset_s, offset_s, type]");
      out.rec.annotations.push_back(
          {a[0].get<double>(), a[1].get<double>(), a[2].get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(e.what());
  }
  return out;
}

void validate_loaded(const Recording& rec, const ValidationOptions& opts,
                     const std::string& where) {
  try {
    validate(rec, opts);
  } catch (const Error& e) {
    throw_parse(where + ": " + e.what());
  }
}

std::vector<std::vector<double>> read_csv_columns(const std::filesystem::path& file,
                                                  const std::vector<std::string>& expected_header,
                                                  std::size_t expected_rows) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open: " + file.string());
  const std::string where = file.string();
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw_parse(where + ": line 1: missing column header");
  {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols != expected_header) {
      throw_parse(where + ": line 1: column header does not match declared channel roles");
    }
  }
  const std::size_t width = expected_header.size();
  std::vector<std::vector<double>> columns(width);
  for (auto& c : columns) c.reserve(expected_rows);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t c = 0; c < width; ++c) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc{}) {
        throw_parse(where + ": line " + std::to_string(line_no) + ", column " +
                    std::to_string(c + 1) + ": not a number");
      }
      columns[c].push_back(v);
      p = res.ptr;
      if (c + 1 < width) {
        if (p == end || *p != ',') {
          throw_parse(where + ": line " + std::to_string(line_no) + ": expected " +
                      std::to_string(width) + " columns");
        }
        ++p;
      }
    }
    if (p != end) {
      throw_parse(where + ": line " + std::to_string(line_no) + ": trailing characters");
    }
  }
  if (columns.front().size() != expected_rows) {
    throw_parse(where + ": length mismatch: " + std::to_string(columns.front().size()) +
                " rows, header declares " + std::to_string(expected_rows));
  }
  return columns;
}

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<const Signal*>& columns) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open for writing: " + file.string());
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front()->size();
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    line.clear();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) line += ',';
      line += format_double((*columns[c])[r]);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + file.string());
}

}  // namespace

std::string_view to_string(ChannelRole role) { return kRoleNames[static_cast<std::size_t>(role)]; }

std::optional<ChannelRole> parse_role(std::string_view name) {
  for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
    if (kRoleNames[i] == name) return static_cast<ChannelRole>(i);
  }
  return std::nullopt;
}

Signal ImuSeries::magnitude() const {
  Signal out(size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::sqrt(axes[0][i] * axes[0][i] + axes[1][i] * axes[1][i] +
                       axes[2][i] * axes[2][i]);
  }
  return out;
}

bool Recording::has(ChannelRole role) const {
  for (const auto& ch : channels) {
    if (ch.role == role) return true;
  }
  return false;
}

const Signal& Recording::channel(ChannelRole role) const {
  for (const auto& ch : channels) {
    if (ch.role == role) return ch.samples;
  }
  throw_parameter("recording has no channel " + std::string(to_string(role)));
}

Signal& Recording::channel(ChannelRole role) {
  return const_cast<Signal&>(std::as_const(*this).channel(role));
}

bool Recording::is_separated() const {
  for (auto role : kSeparatedRoles) {
    if (!has(role)) return false;
  }
  return true;
}

void validate(const Recording& rec, const ValidationOptions& opts) {
  if (!(rec.sample_rate > 0.0) || !std::isfinite(rec.sample_rate)) {
    throw_parameter("sample_rate must be positive");
  }
  if (rec.channels.empty()) throw_parameter("recording has no biopotential channels");
  std::set<ChannelRole> seen;
  for (std::size_t i = 0; i < rec.channels.size(); ++i) {
    const auto& ch = rec.channels[i];
    if (is_accel(ch.role)) {
      throw_parameter("accelerometer role used as a biopotential channel");
    }
    if (!seen.insert(ch.role).second) {
      throw_parameter("duplicate channel role " + std::string(to_string(ch.role)));
    }
    if (ch.samples.size() != rec.channels.front().samples.size()) {
      throw_parameter("length mismatch: channel " + std::to_string(i) + " has " +
                      std::to_string(ch.samples.size()) + " samples, channel 0 has " +
                      std::to_string(rec.channels.front().samples.size()));
    }
  }
  const auto& ax = rec.imu.axes;
  if (ax[0].size() != ax[1].size() || ax[0].size() != ax[2].size()) {
    throw_parameter("length mismatch between IMU axes");
  }
  if (!rec.imu.empty() && !(rec.imu.sample_rate > 0.0)) {
    throw_parameter("imu sample_rate must be positive");
  }
  const double duration = rec.duration();
  constexpr double kSlack = 1e-9;
  for (const auto& a : rec.annotations) {
    if (!(a.onset < a.offset)) throw_parameter("annotation onset must precede offset");
    if (a.onset < -kSlack || a.offset > duration + kSlack) {
      throw_parameter("annotation [" + format_double(a.onset) + ", " + format_double(a.offset) +
                      "] lies outside the recording [0, " + format_double(duration) + "]");
    }
    if (!opts.allow_short_events && a.duration() < kMinEventSeconds - kSlack) {
      throw_parameter("annotation [" + format_double(a.onset) + ", " + format_double(a.offset) +
                      "] is shorter than 10 s (use --allow-short-events to keep it)");
    }
  }
}

void save_recording(const Recording& rec, const std::filesystem::path& path,
                    PayloadFormat format) {
  validate(rec, {.allow_short_events = true});
  auto header = make_header(rec, format);

  if (format == PayloadFormat::Binary) {
    std::vector<double> payload;
    payload.reserve(rec.channels.size() * rec.length() + 3 * rec.imu.size());
    for (const auto& ch : rec.channels) payload.insert(payload.end(), ch.samples.begin(), ch.samples.end());
    for (const auto& axis : rec.imu.axes) payload.insert(payload.end(), axis.begin(), axis.end());
    container::write(path, std::move(header), payload);
    return;
  }

  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + path.string());
  {
    std::ofstream out(path / "header.json", std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write header in " + path.string());
    out << header.dump(2) << '\n';
  }
  std::vector<std::string> names;
  std::vector<const Signal*> cols;
  for (const auto& ch : rec.channels) {
    names.emplace_back(to_string(ch.role));
    cols.push_back(&ch.samples);
  }
  write_csv(path / "channels.csv", names, cols);
  std::filesystem::remove(path / "imu.csv", ec);
  if (!rec.imu.empty()) {
    write_csv(path / "imu.csv", {"AccelX", "AccelY", "AccelZ"},
              {&rec.imu.axes[0], &rec.imu.axes[1], &rec.imu.axes[2]});
  }
}

Recording load_recording(const std::filesystem::path& path, const ValidationOptions& opts) {
  const std::string where = path.string();
  if (std::filesystem::is_directory(path)) {
    nlohmann::json h;
    {
      std::ifstream in(path / "header.json");
      if (!in) throw Error(ErrorKind::Io, "cannot open " + (path / "header.json").string());
      try {
        h = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw_parse((path / "header.json").string() + ": byte offset " + std::to_string(e.byte) +
                    ": " + e.what());
      }
    }
    auto parsed = parse_header(h, (path / "header.json").string());
    std::vector<std::string> names;
    for (const auto& ch : parsed.rec.channels) names.emplace_back(to_string(ch.role));
    const std::size_t rows = parsed.channel_lengths.empty() ? 0 : parsed.channel_lengths[0];
    auto cols = read_csv_columns(path / "channels.csv", names, rows);
    for (std::size_t c = 0; c < cols.size(); ++c) parsed.rec.channels[c].samples = std::move(cols[c]);
    if (parsed.imu_lengths[0] > 0) {
      auto imu = read_csv_columns(path / "imu.csv", {"AccelX", "AccelY", "AccelZ"},
                                  parsed.imu_lengths[0]);
      for (std::size_t a = 0; a < 3; ++a) parsed.rec.imu.axes[a] = std::move(imu[a]);
    }
    validate_loaded(parsed.rec, opts, where);
    return std::move(parsed.rec);
  }

  auto contents = container::read(path);
  auto parsed = parse_header(contents.header, where);
  if (contents.header.value("payload", std::string{}) != "binary") {
    throw_parse(where + ": header: single-file recordings must carry a binary payload");
  }
  std::size_t expected = 0;
  for (auto n : parsed.channel_lengths) expected += n;
  for (auto n : parsed.imu_lengths) expected += n;
  if (expected != contents.payload.size()) {
    throw_parse(where + ": length mismatch: declared lengths sum to " + std::to_string(expected) +
                " doubles, payload holds " + std::to_string(contents.payload.size()));
  }
  std::size_t offset = 0;
  auto take = [&](std::size_t n) {
    Signal s(contents.payload.begin() + static_cast<std::ptrdiff_t>(offset),
             contents.payload.begin() + static_cast<std::ptrdiff_t>(offset + n));
    offset += n;
    return s;
  };
  for (std::size_t c = 0; c < parsed.rec.channels.size(); ++c) {
    parsed.rec.channels[c].samples = take(parsed.channel_lengths[c]);
  }
  for (std::size_t a = 0; a < 3; ++a) parsed.rec.imu.axes[a] = take(parsed.imu_lengths[a]);
  validate_loaded(parsed.rec, opts, where);
  return std::move(parsed.rec);
}

}  // namespace earpipe
