#include "earpipe/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "earpipe/error.hpp"
#include "earpipe/fft.hpp"
#include "earpipe/spectral.hpp"

namespace earpipe {
namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view s, std::size_t line, std::size_t column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw_parse("feature csv: line " + std::to_string(line) + ", column " +
                std::to_string(column) + ": not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t at = 0;
  while (true) {
    const auto comma = line.find(',', at);
    out.push_back(line.substr(at, comma == std::string_view::npos ? std::string_view::npos : comma - at));
    if (comma == std::string_view::npos) break;
    at = comma + 1;
  }
  return out;
}

std::string channel_prefix(ChannelRole role) {
  switch (role) {
    case ChannelRole::EegLeft: return "eeg_l";
    case ChannelRole::EegRight: return "eeg_r";
    case ChannelRole::EmgLeft: return "emg_l";
    case ChannelRole::EmgRight: return "emg_r";
    case ChannelRole::EogLeft: return "eog_l";
    case ChannelRole::EogRight: return "eog_r";
    default: return std::string(to_string(role));
  }
}

}  // namespace

std::array<double, kTimeFeatureCount> time_features(std::span<const double> x) {
  require(!x.empty(), "time_features: empty window");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) {
    const double c = *lo;
    return {c, 0.0, 0.0, 0.0, 0.0, c, c, std::abs(c)};
  }
  const auto n = static_cast<double>(x.size());
  const double mean = dsp::mean(x);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0, sq = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
    mad += std::abs(d);
    sq += v * v;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double sd = std::sqrt(m2);
  double skew = 0.0;
  double kurt = 0.0;
  if (m2 > 0) {
    skew = m3 / (m2 * sd);
    kurt = m4 / (m2 * m2);
  }
  return {mean, sd, mad / n, skew, kurt, *lo, *hi, std::sqrt(sq / n)};
}

Eigen::MatrixXd mel_filterbank(std::size_t frame_len, double sample_rate, const MfccConfig& cfg) {
  const double f_hi = cfg.f_hi_hz > 0 ? cfg.f_hi_hz : 0.5 * sample_rate;
  require(cfg.filters >= 1, "mfcc: need at least one filter");
  require(cfg.f_lo_hz >= 0 && cfg.f_lo_hz < f_hi && f_hi <= 0.5 * sample_rate,
          "mfcc: filterbank edges must satisfy 0 <= lo < hi <= Nyquist");
  const std::size_t bins = frame_len / 2 + 1;
  const double m_lo = hz_to_mel(cfg.f_lo_hz);
  const double m_hi = hz_to_mel(f_hi);
  std::vector<double> edges(cfg.filters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(i) /
                                    static_cast<double>(cfg.filters + 1));
  }
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cfg.filters),
                                             static_cast<Eigen::Index>(bins));
  for (std::size_t j = 0; j < cfg.filters; ++j) {
    const double a = edges[j], b = edges[j + 1], c = edges[j + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = sample_rate * static_cast<double>(k) / static_cast<double>(frame_len);
      double w = 0.0;
      if (f >= a && f <= b && b > a) w = (f - a) / (b - a);
      else if (f > b && f <= c && c > b) w = (c - f) / (c - b);
      fb(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = w;
    }
  }
  return fb;
}

std::vector<double> mfcc_features(std::span<const double> window, double sample_rate,
                                  const MfccConfig& cfg) {
  const auto expected = static_cast<std::size_t>(std::llround(kMinEventSeconds * sample_rate));
  require(window.size() == expected, "mfcc: window must hold exactly 10 s of samples");
  require(cfg.frames >= 1 && window.size() % cfg.frames == 0,
          "mfcc: window length must divide evenly into frames");
  require(cfg.coeffs >= 1 && cfg.coeffs <= cfg.filters, "mfcc: need 1 <= coeffs <= filters");
  require(cfg.log_floor > 0, "mfcc: log floor must be positive");
  const std::size_t len = window.size() / cfg.frames;
  const auto fb = mel_filterbank(len, sample_rate, cfg);
  const auto taper = dsp::hann(len);
  const auto nf = static_cast<double>(cfg.filters);

  std::vector<double> out;
  out.reserve(cfg.frames * cfg.coeffs);
  Signal frame(len);
  Eigen::VectorXd power(static_cast<Eigen::Index>(len / 2 + 1));
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    for (std::size_t i = 0; i < len; ++i) frame[i] = window[f * len + i] * taper[i];
    const auto spec = fft::rfft(frame);
    for (std::size_t k = 0; k < spec.size(); ++k) power(static_cast<Eigen::Index>(k)) = std::norm(spec[k]);
    const Eigen::VectorXd energy = fb * power;
    for (std::size_t c = 0; c < cfg.coeffs; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < cfg.filters; ++j) {
        const double logged = std::log(std::max(energy(static_cast<Eigen::Index>(j)), cfg.log_floor));
        acc += logged * std::cos(std::numbers::pi * static_cast<double>(c) *
                                 (2.0 * static_cast<double>(j) + 1.0) / (2.0 * nf));
      }
      out.push_back(acc * std::sqrt((c == 0 ? 1.0 : 2.0) / nf));
    }
  }
  return out;
}

std::vector<double> feature_vector(const std::array<std::span<const double>, 6>& channels,
                                   double sample_rate) {
  std::vector<double> out;
  out.reserve(kFeatureCount);
  for (const auto& ch : channels) {
    const auto t = time_features(ch);
    out.insert(out.end(), t.begin(), t.end());
    const auto m = mfcc_features(ch, sample_rate);
    out.insert(out.end(), m.begin(), m.end());
  }
  return out;
}

std::vector<double> feature_vector(const LabeledEpoch& epoch, double sample_rate) {
  std::array<std::span<const double>, 6> views;
  for (std::size_t c = 0; c < 6; ++c) views[c] = epoch.channels[c];
  return feature_vector(views, sample_rate);
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    static constexpr std::array<const char*, kTimeFeatureCount> stats = {
        "mean", "std", "avg_dev", "skewness", "kurtosis", "min", "max", "rms"};
    std::vector<std::string> out;
    for (auto role : kSeparatedRoles) {
      const auto p = channel_prefix(role);
      for (const char* s : stats) out.push_back(p + "_" + s);
      for (std::size_t f = 0; f < kMfccFrames; ++f) {
        for (std::size_t c = 0; c < kMfccCoeffs; ++c) {
          out.push_back(p + "_mfcc_f" + std::to_string(f) + "_c" + std::to_string(c));
        }
      }
    }
    return out;
  }();
  return names;
}

FeatureTable FeatureTable::rows(const std::vector<std::size_t>& idx) const {
  FeatureTable out;
  out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.X.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(idx[r]));
    out.labels.push_back(labels[idx[r]]);
    out.patient_ids.push_back(patient_ids[idx[r]]);
    out.start_s.push_back(start_s[idx[r]]);
  }
  return out;
}

void FeatureTable::append(const FeatureTable& other) {
  if (other.size() == 0) return;
  if (size() == 0) {
    *this = other;
    return;
  }
  require(X.cols() == other.X.cols(), "FeatureTable::append: column count differs");
  Eigen::MatrixXd joined(X.rows() + other.X.rows(), X.cols());
  joined << X, other.X;
  X = std::move(joined);
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  patient_ids.insert(patient_ids.end(), other.patient_ids.begin(), other.patient_ids.end());
  start_s.insert(start_s.end(), other.start_s.begin(), other.start_s.end());
}

FeatureTable extract_features(const Recording& rec, const WindowSpec& spec) {
  for (auto role : kSeparatedRoles) {
    require(rec.has(role), "features: separated channel " + std::string(to_string(role)) + " missing");
  }
  const auto spans = epoch_spans(rec, spec);
  const auto win = static_cast<std::size_t>(std::llround(spec.window_s * rec.sample_rate));
  FeatureTable t;
  t.X.resize(static_cast<Eigen::Index>(spans.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t r = 0; r < spans.size(); ++r) {
    std::array<std::span<const double>, 6> views;
    for (std::size_t c = 0; c < 6; ++c) {
      views[c] = std::span<const double>(rec.channel(kSeparatedRoles[c])).subspan(spans[r].first_sample, win);
    }
    const auto fv = feature_vector(views, rec.sample_rate);
    t.X.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(fv.data(), static_cast<Eigen::Index>(fv.size()));
    t.labels.push_back(spans[r].label);
    t.patient_ids.push_back(rec.patient_id);
    t.start_s.push_back(spans[r].start_s);
  }
  return t;
}

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  const auto& names = feature_names();
  require(static_cast<std::size_t>(table.X.cols()) == names.size() || table.size() == 0,
          "write_feature_csv: table does not have the canonical feature count");
  for (const auto& n : names) out << n << ',';
  out << "label,patient_id,start_s\n";
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto& pid = table.patient_ids[r];
    require(pid.find_first_of(",\n\r\"") == std::string::npos,
            "write_feature_csv: patient id contains a CSV delimiter");
    for (Eigen::Index c = 0; c < table.X.cols(); ++c) {
      out << format_double(table.X(static_cast<Eigen::Index>(r), c)) << ',';
    }
    out << (table.labels[r] == EpochLabel::Seizure ? 1 : 0) << ',' << pid << ','
        << format_double(table.start_s[r]) << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw_parse("feature csv: missing header line");
  const auto header = split(line);
  const auto& names = feature_names();
  if (header.size() != names.size() + 3) {
    throw_parse("feature csv: line 1: expected " + std::to_string(names.size() + 3) +
                " columns, found " + std::to_string(header.size()));
  }
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (header[c] != names[c]) {
      throw_parse("feature csv: line 1, column " + std::to_string(c + 1) + ": expected '" +
                  names[c] + "', found '" + std::string(header[c]) + "'");
    }
  }
  std::vector<std::vector<double>> rows;
  FeatureTable t;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw_parse("feature csv: line " + std::to_string(line_no) + ": expected " +
                  std::to_string(header.size()) + " columns, found " + std::to_string(cells.size()));
    }
    std::vector<double> row(names.size());
    for (std::size_t c = 0; c < names.size(); ++c) row[c] = parse_double(cells[c], line_no, c + 1);
    const auto lab = cells[names.size()];
    if (lab != "0" && lab != "1") {
      throw_parse("feature csv: line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    t.labels.push_back(lab == "1" ? EpochLabel::Seizure : EpochLabel::NonSeizure);
    t.patient_ids.emplace_back(cells[names.size() + 1]);
    t.start_s.push_back(parse_double(cells[names.size() + 2], line_no, names.size() + 3));
    rows.push_back(std::move(row));
  }
  t.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      t.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return t;
}

}  // namespace earpipe
