#include "earpipe/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "earpipe/error.hpp"

namespace earpipe {
namespace {

struct Biquad {
  double b0, b1, b2, a1, a2;  // normalized by a0

  static Biquad from_raw(double b0, double b1, double b2, double a0, double a1, double a2) {
    return {b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0};
  }

  // Transposed direct form II, zero initial state.
  void run(Signal& x) const {
    double z1 = 0.0, z2 = 0.0;
    for (auto& v : x) {
      const double in = v;
      const double out = b0 * in + z1;
      z1 = b1 * in - a1 * out + z2;
      z2 = b2 * in - a2 * out;
      v = out;
    }
  }
};

Biquad notch_section(double fs, double f0, double q) {
  const double w0 = 2.0 * std::numbers::pi * f0 / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  return Biquad::from_raw(1.0, -2.0 * c, 1.0, 1.0 + alpha, -2.0 * c, 1.0 - alpha);
}

Biquad lowpass_section(double fs, double f0, double q) {
  const double w0 = 2.0 * std::numbers::pi * f0 / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  return Biquad::from_raw((1 - c) / 2, 1 - c, (1 - c) / 2, 1 + alpha, -2 * c, 1 - alpha);
}

Biquad highpass_section(double fs, double f0, double q) {
  const double w0 = 2.0 * std::numbers::pi * f0 / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  return Biquad::from_raw((1 + c) / 2, -(1 + c), (1 + c) / 2, 1 + alpha, -2 * c, 1 - alpha);
}

// Section Qs of a 4th-order Butterworth prototype: 1 / (2 cos(k pi / 8)), k = 1, 3.
const std::array<double, 2> kButterworth4Q = {1.0 / (2.0 * std::cos(std::numbers::pi / 8.0)),
                                              1.0 / (2.0 * std::cos(3.0 * std::numbers::pi / 8.0))};

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

void validate(const PreprocessConfig& cfg, double sample_rate) {
  require(cfg.mains_hz == 50.0 || cfg.mains_hz == 60.0, "mains_hz must be 50 or 60");
  require(cfg.mains_hz < sample_rate / 2, "mains frequency must lie below Nyquist");
  require(cfg.notch_q > 0, "notch_q must be positive");
  require(cfg.outlier_sigma > 0, "outlier_sigma must be positive");
  if (cfg.bandpass) {
    const auto [lo, hi] = *cfg.bandpass;
    require(0 < lo && lo < hi && hi < sample_rate / 2, "bandpass needs 0 < lo < hi < Nyquist");
  }
}

Signal notch_filter(std::span<const double> x, double sample_rate, double mains_hz, double q) {
  require(sample_rate > 0, "notch_filter: sample_rate must be positive");
  require(mains_hz > 0 && mains_hz < sample_rate / 2,
          "notch_filter: mains frequency must lie strictly below Nyquist");
  require(q > 0, "notch_filter: q must be positive");
  Signal y(x.begin(), x.end());
  notch_section(sample_rate, mains_hz, q).run(y);
  return y;
}

Signal detrend_linear(std::span<const double> x) {
  const std::size_t n = x.size();
  require(n >= 2, "detrend_linear: need at least 2 samples");
  const double centre = 0.5 * static_cast<double>(n - 1);
  double sx = 0.0, stx = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) - centre;
    sx += x[i];
    stx += t * x[i];
    stt += t * t;
  }
  const double intercept = sx / static_cast<double>(n);
  const double slope = stx / stt;
  Signal y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = x[i] - intercept - slope * (static_cast<double>(i) - centre);
  }
  return y;
}

OutlierResult outlier_clip_detailed(std::span<const double> x, double sigma) {
  require(sigma > 0, "outlier_clip: sigma must be positive");
  OutlierResult out{Signal(x.begin(), x.end()), {}};
  if (x.empty()) return out;

  const double med = median_of(out.signal);
  std::vector<double> dev(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dev[i] = std::abs(x[i] - med);
  const double robust_std = 1.4826 * median_of(dev);
  if (robust_std == 0.0) return out;

  const double limit = sigma * robust_std;
  std::vector<char> flagged(x.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (dev[i] > limit) {
      flagged[i] = 1;
      out.replaced.push_back(i);
    }
  }
  if (out.replaced.size() == x.size()) throw_degenerate("outlier_clip: every sample was flagged");

  const std::size_t n = x.size();
  std::size_t i = 0;
  while (i < n) {
    if (!flagged[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && flagged[j]) ++j;  // run [i, j)
    const bool has_left = i > 0;
    const bool has_right = j < n;
    for (std::size_t k = i; k < j; ++k) {
      if (has_left && has_right) {
        const double frac = static_cast<double>(k - (i - 1)) / static_cast<double>(j - (i - 1));
        out.signal[k] = x[i - 1] + frac * (x[j] - x[i - 1]);
      } else {
        out.signal[k] = has_left ? x[i - 1] : x[j];
      }
    }
    i = j;
  }
  return out;
}

Signal outlier_clip(std::span<const double> x, double sigma) {
  return outlier_clip_detailed(x, sigma).signal;
}

Signal bandpass(std::span<const double> x, double sample_rate, double lo_hz, double hi_hz) {
  require(sample_rate > 0, "bandpass: sample_rate must be positive");
  require(0 < lo_hz && lo_hz < hi_hz && hi_hz < sample_rate / 2,
          "bandpass: need 0 < lo < hi < Nyquist");
  const std::size_t n = x.size();
  if (n < 2) return Signal(x.begin(), x.end());

  std::vector<Biquad> sections;
  for (double q : kButterworth4Q) sections.push_back(highpass_section(sample_rate, lo_hz, q));
  for (double q : kButterworth4Q) sections.push_back(lowpass_section(sample_rate, hi_hz, q));

  // Odd reflection at both ends, three periods of the low cutoff long.
  const auto pad = std::min(n - 1, static_cast<std::size_t>(std::ceil(3.0 * sample_rate / lo_hz)));
  Signal ext(n + 2 * pad);
  for (std::size_t k = 0; k < pad; ++k) {
    ext[k] = 2.0 * x[0] - x[pad - k];
    ext[pad + n + k] = 2.0 * x[n - 1] - x[n - 2 - k];
  }
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  for (const auto& s : sections) s.run(ext);
  std::reverse(ext.begin(), ext.end());
  for (const auto& s : sections) s.run(ext);
  std::reverse(ext.begin(), ext.end());

  return Signal(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

Recording preprocess(const Recording& rec, const PreprocessConfig& cfg) {
  validate(cfg, rec.sample_rate);
  Recording out = rec;
  for (auto& ch : out.channels) {
    auto y = notch_filter(ch.samples, rec.sample_rate, cfg.mains_hz, cfg.notch_q);
    if (y.size() >= 2) y = detrend_linear(y);
    y = outlier_clip(y, cfg.outlier_sigma);
    if (cfg.bandpass) y = bandpass(y, rec.sample_rate, cfg.bandpass->first, cfg.bandpass->second);
    ch.samples = std::move(y);
  }
  return out;
}

ImpedanceReading electrode_impedance(double v_rms, double i_amp, double series_r) {
  require(i_amp > 0, "electrode_impedance: injected current must be positive");
  require(v_rms >= 0 && series_r >= 0, "electrode_impedance: negative voltage or resistance");
  ImpedanceReading r{v_rms, i_amp, series_r, 0.0, false};
  double z = v_rms * std::numbers::sqrt2 / i_amp - series_r;
  if (z < 0) {
    if (z < -1e-6 * std::max(series_r, 1.0)) {
      throw_degenerate("electrode_impedance: measured voltage implies an impedance below the "
                       "series resistance (implausible measurement)");
    }
    z = 0.0;
  }
  r.z = z;
  r.in_range = z <= kImpedanceCeilingOhm;
  return r;
}

}  // namespace earpipe
