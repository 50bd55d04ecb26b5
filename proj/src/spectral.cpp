#include "earpipe/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "earpipe/error.hpp"
#include "earpipe/fft.hpp"

namespace earpipe::dsp {

Signal hann(std::size_t n, bool periodic) {
  Signal w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  const double denom = periodic ? static_cast<double>(n) : static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom);
  }
  return w;
}

Psd welch(std::span<const double> x, double sample_rate, std::size_t segment_len,
          std::size_t overlap) {
  require(segment_len > 0 && overlap < segment_len, "welch: need 0 <= overlap < segment_len");
  require(sample_rate > 0, "welch: sample_rate must be positive");
  const auto window = hann(segment_len);
  double wpow = 0.0;
  for (double v : window) wpow += v * v;

  const std::size_t bins = segment_len / 2 + 1;
  Psd out;
  out.power.assign(bins, 0.0);
  out.freqs_hz.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out.freqs_hz[k] = sample_rate * static_cast<double>(k) / static_cast<double>(segment_len);
  }

  const std::size_t step = segment_len - overlap;
  std::size_t segments = 0;
  Signal buf(segment_len);
  auto accumulate = [&](std::size_t start) {
    for (std::size_t i = 0; i < segment_len; ++i) {
      const std::size_t j = start + i;
      buf[i] = (j < x.size() ? x[j] : 0.0) * window[i];
    }
    const auto spec = fft::rfft(buf);
    for (std::size_t k = 0; k < bins; ++k) out.power[k] += std::norm(spec[k]);
    ++segments;
  };
  if (x.size() <= segment_len) {
    accumulate(0);
  } else {
    for (std::size_t start = 0; start + segment_len <= x.size(); start += step) accumulate(start);
  }

  const double scale = 1.0 / (sample_rate * wpow * static_cast<double>(segments));
  for (std::size_t k = 0; k < bins; ++k) {
    const bool edge = (k == 0) || (segment_len % 2 == 0 && k == bins - 1);
    out.power[k] *= scale * (edge ? 1.0 : 2.0);
  }
  return out;
}

Signal analytic_envelope(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  std::vector<fft::cplx> z(x.begin(), x.end());
  auto spec = fft::fft(z);
  // Keep DC (and Nyquist for even n), double the positive half, drop the negative half.
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < n; ++k) {
    if (k < (n + 1) / 2) {
      spec[k] *= 2.0;
    } else if (!(n % 2 == 0 && k == half)) {
      spec[k] = 0.0;
    }
  }
  const auto analytic = fft::ifft(spec);
  Signal env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(analytic[i]);
  return env;
}

double dominant_frequency(std::span<const double> x, double sample_rate) {
  const auto spec = fft::rfft(x);
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t k = 1; k < spec.size(); ++k) {
    const double m = std::abs(spec[k]);
    if (m > best_mag) {
      best_mag = m;
      best = k;
    }
  }
  return sample_rate * static_cast<double>(best) / static_cast<double>(x.size());
}

Signal moving_average(std::span<const double> x, std::size_t width) {
  const std::size_t n = x.size();
  Signal out(n);
  if (n == 0) return out;
  const std::size_t half = width / 2;
  // Prefix sums keep this O(n) for long recordings.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t h = std::min({half, i, n - 1 - i});
    const std::size_t lo = i - h;
    const std::size_t hi = i + h + 1;
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

Signal resample_linear(std::span<const double> x, double rate_in, double rate_out,
                       std::size_t n_out) {
  require(rate_in > 0 && rate_out > 0, "resample_linear: rates must be positive");
  Signal out(n_out, 0.0);
  if (x.empty()) return out;
  const double last = static_cast<double>(x.size() - 1);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double pos = std::clamp(static_cast<double>(k) / rate_out * rate_in, 0.0, last);
    const auto i0 = static_cast<std::size_t>(std::floor(pos));
    const std::size_t i1 = std::min(i0 + 1, x.size() - 1);
    const double frac = pos - static_cast<double>(i0);
    out[k] = x[i0] + frac * (x[i1] - x[i0]);
  }
  return out;
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

double l2_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double relative_l2_error(std::span<const double> reference, std::span<const double> estimate) {
  require(reference.size() == estimate.size(), "relative_l2_error: length mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - estimate[i];
    num += d * d;
    den += reference[i] * reference[i];
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "pearson: length mismatch");
  if (a.size() < 2) return 0.0;
  const double ma = mean(a);
  const double mb = mean(b);
  double saa = 0.0, sbb = 0.0, sab = 0.0, maxa = 0.0, maxb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
    maxa = std::max(maxa, std::abs(a[i]));
    maxb = std::max(maxb, std::abs(b[i]));
  }
  const double n = static_cast<double>(a.size());
  const double sda = std::sqrt(saa / n);
  const double sdb = std::sqrt(sbb / n);
  if (sda <= 1e-9 * maxa || sdb <= 1e-9 * maxb) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace earpipe::dsp
