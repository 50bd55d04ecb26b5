#include "earpipe/vmd.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>

#include "earpipe/error.hpp"
#include "earpipe/fft.hpp"
#include "earpipe/spectral.hpp"

namespace earpipe {

using fft::cplx;

void validate(const VmdConfig& cfg) {
  require(cfg.k_modes >= 1, "vmd: k_modes must be >= 1");
  require(cfg.alpha > 0, "vmd: alpha must be positive");
  require(cfg.tau >= 0, "vmd: tau must be non-negative");
  require(cfg.tol > 0, "vmd: tol must be positive");
  require(cfg.max_iter >= 1, "vmd: max_iter must be >= 1");
}

Signal VmdResult::mode_sum() const {
  Signal s(residual.size(), 0.0);
  for (const auto& m : modes) {
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += m[i];
  }
  return s;
}

VmdResult vmd_decompose(std::span<const double> x, double sample_rate, const VmdConfig& cfg) {
  validate(cfg);
  require(sample_rate > 0, "vmd: sample_rate must be positive");
  const std::size_t n = x.size();
  const auto K = static_cast<std::size_t>(cfg.k_modes);
  require(n >= 2 * K, "vmd: signal must hold at least 2 * k_modes samples");
  for (double v : x) require(std::isfinite(v), "vmd: input contains NaN or Inf");

  // Mirror extension: reversed first half | signal | reversed second half.
  const std::size_t half_l = n / 2;
  const std::size_t half_r = n - half_l;
  const std::size_t T = 2 * n;
  Signal mirrored(T);
  for (std::size_t i = 0; i < half_l; ++i) mirrored[i] = x[half_l - 1 - i];
  std::copy(x.begin(), x.end(), mirrored.begin() + static_cast<std::ptrdiff_t>(half_l));
  for (std::size_t i = 0; i < half_r; ++i) mirrored[half_l + n + i] = x[n - 1 - i];

  const auto f_hat = fft::rfft(mirrored);  // bins 0 .. T/2
  const std::size_t bins = f_hat.size();
  std::vector<double> freqs(bins);
  for (std::size_t k = 0; k < bins; ++k) freqs[k] = static_cast<double>(k) / static_cast<double>(T);

  std::vector<double> omega(K, 0.0);
  switch (cfg.init) {
    case VmdInit::Uniform:
      for (std::size_t k = 0; k < K; ++k) omega[k] = 0.5 / static_cast<double>(K) * static_cast<double>(k);
      break;
    case VmdInit::Zero:
      break;
    case VmdInit::Random: {
      std::mt19937_64 rng(cfg.seed);
      std::uniform_real_distribution<double> unit(0.0, 0.5);
      for (auto& w : omega) w = unit(rng);
      std::sort(omega.begin(), omega.end());
      break;
    }
  }

  std::vector<std::vector<cplx>> u(K, std::vector<cplx>(bins, cplx{}));
  std::vector<cplx> total(bins, cplx{});
  std::vector<cplx> lambda(bins, cplx{});
  std::vector<cplx> prev(bins);

  VmdResult result;
  result.sample_rate = sample_rate;
  const double two_alpha = 2.0 * cfg.alpha;
  int iter = 0;
  bool converged = false;
  while (iter < cfg.max_iter) {
    ++iter;
    double change = 0.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      auto& uk = u[k];
      prev = uk;
      const double wk = omega[k];
      double num = 0.0;
      double den = 0.0;
      for (std::size_t b = 0; b < bins; ++b) {
        const cplx others = total[b] - uk[b];
        const double d = freqs[b] - wk;
        const cplx next = (f_hat[b] - others + 0.5 * lambda[b]) / (1.0 + two_alpha * d * d);
        total[b] = others + next;
        uk[b] = next;
        const double p = std::norm(next);
        num += freqs[b] * p;
        den += p;
        change += std::norm(next - prev[b]);
        norm += std::norm(prev[b]);
      }
      if (den > 0) omega[k] = num / den;
    }
    if (cfg.tau > 0) {
      for (std::size_t b = 0; b < bins; ++b) lambda[b] += cfg.tau * (f_hat[b] - total[b]);
    }
    const double rel = norm > 0 ? change / norm : (change > 0 ? 1.0 : 0.0);
    if (rel < cfg.tol) {
      converged = true;
      break;
    }
  }
  result.iterations_used = iter;
  result.converged = converged;

  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return omega[a] < omega[b]; });

  result.residual.assign(x.begin(), x.end());
  for (std::size_t idx : order) {
    const auto full = fft::irfft(u[idx], T);
    Signal mode(full.begin() + static_cast<std::ptrdiff_t>(half_l),
                full.begin() + static_cast<std::ptrdiff_t>(half_l + n));
    for (std::size_t i = 0; i < n; ++i) result.residual[i] -= mode[i];
    result.modes.push_back(std::move(mode));
    result.center_freqs.push_back(omega[idx] * sample_rate);
  }
  return result;
}

bool MotionCorrelation::excluded(std::size_t mode) const {
  return std::abs(r.at(mode)) > threshold;
}

std::vector<std::size_t> MotionCorrelation::exclusion_set() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (excluded(k)) out.push_back(k);
  }
  return out;
}

Signal mode_envelope(std::span<const double> mode, double sample_rate, double out_rate,
                     std::size_t n_out) {
  const auto env = dsp::analytic_envelope(mode);
  const auto width = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(kEnvelopeSmoothingSeconds * sample_rate)));
  const auto smooth = dsp::moving_average(env, width);
  return dsp::resample_linear(smooth, sample_rate, out_rate, n_out);
}

MotionCorrelation motion_correlation(const VmdResult& result, const ImuSeries& accel,
                                     double threshold) {
  require(result.sample_rate > 0, "motion_correlation: result lacks a sample rate");
  require(!accel.empty() && accel.sample_rate > 0, "motion_correlation: accelerometer data required");
  MotionCorrelation corr;
  corr.threshold = threshold;
  const std::size_t n = result.residual.size();
  require(n > 0, "motion_correlation: empty decomposition");

  // Accelerometer samples whose timestamps fall inside the mode support.
  const double span_s = static_cast<double>(n - 1) / result.sample_rate;
  const auto n_common = std::min(
      accel.size(), static_cast<std::size_t>(std::floor(span_s * accel.sample_rate)) + 1);
  require(n_common >= 2, "motion_correlation: modes and accelerometer do not overlap");

  auto mag = accel.magnitude();
  mag.resize(n_common);
  const double m = dsp::mean(mag);
  for (auto& v : mag) v -= m;

  for (const auto& mode : result.modes) {
    const auto env = mode_envelope(mode, result.sample_rate, accel.sample_rate, n_common);
    corr.r.push_back(dsp::pearson(env, mag));
  }
  return corr;
}

MotionReconstruction reconstruct_excluding_motion(const VmdResult& result,
                                                  const MotionCorrelation& corr) {
  require(corr.r.size() == result.modes.size(),
          "reconstruct_excluding_motion: correlation does not match the decomposition");
  MotionReconstruction out;
  out.signal.assign(result.residual.size(), 0.0);
  std::size_t kept = 0;
  for (std::size_t k = 0; k < result.modes.size(); ++k) {
    if (corr.excluded(k)) continue;
    ++kept;
    for (std::size_t i = 0; i < out.signal.size(); ++i) out.signal[i] += result.modes[k][i];
  }
  out.all_excluded = kept == 0;
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> plan_blocks(std::size_t n, std::size_t block,
                                                             std::size_t overlap) {
  require(block > overlap, "plan_blocks: block must exceed overlap");
  if (n <= block) return {{0, n}};
  const std::size_t body = n - overlap;
  const std::size_t count = (body + (block - overlap) - 1) / (block - overlap);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t b = body * i / count;
    const std::size_t e = body * (i + 1) / count + overlap;
    out.emplace_back(b, e);
  }
  return out;
}

DenoiseResult denoise_channel(std::span<const double> x, double sample_rate,
                              const ImuSeries& accel, const DenoiseConfig& cfg) {
  require(!accel.empty(), "denoise: recording has no accelerometer data");
  require(cfg.block_s > cfg.overlap_s && cfg.overlap_s >= 0, "denoise: invalid block layout");
  const std::size_t n = x.size();
  const auto block = static_cast<std::size_t>(std::llround(cfg.block_s * sample_rate));
  const auto overlap = static_cast<std::size_t>(std::llround(cfg.overlap_s * sample_rate));
  const auto blocks = plan_blocks(n, block, overlap);

  DenoiseResult out;
  out.signal.assign(n, 0.0);
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const auto [b, e] = blocks[bi];
    const auto seg = x.subspan(b, e - b);
    const auto res = vmd_decompose(seg, sample_rate, cfg.vmd);

    ImuSeries slice;
    slice.sample_rate = accel.sample_rate;
    const auto j0 = std::min(
        accel.size(),
        static_cast<std::size_t>(std::llround(static_cast<double>(b) / sample_rate * accel.sample_rate)));
    const auto j1 = std::min(
        accel.size(),
        static_cast<std::size_t>(std::llround(static_cast<double>(e) / sample_rate * accel.sample_rate)));
    for (std::size_t a = 0; a < 3; ++a) {
      slice.axes[a].assign(accel.axes[a].begin() + static_cast<std::ptrdiff_t>(j0),
                           accel.axes[a].begin() + static_cast<std::ptrdiff_t>(j1));
    }
    const auto corr = motion_correlation(res, slice, cfg.corr_threshold);
    const auto recon = reconstruct_excluding_motion(res, corr);
    bool any_excluded = false;
    for (std::size_t k = 0; k < corr.r.size(); ++k) any_excluded = any_excluded || corr.excluded(k);
    // Blocks with no motion-correlated mode are passed through untouched.
    const std::span<const double> kept = any_excluded ? std::span<const double>(recon.signal) : seg;

    BlockReport report;
    report.block = bi;
    report.start_s = static_cast<double>(b) / sample_rate;
    report.center_freqs = res.center_freqs;
    report.r = corr.r;
    for (std::size_t k = 0; k < corr.r.size(); ++k) report.excluded.push_back(corr.excluded(k));
    report.converged = res.converged;
    report.all_excluded = recon.all_excluded;
    out.blocks.push_back(std::move(report));

    // Hann cross-fade over the overlaps with the neighbouring blocks.
    const std::size_t len = e - b;
    for (std::size_t i = 0; i < len; ++i) {
      double w = 1.0;
      if (bi > 0 && i < overlap) {
        w = 0.5 - 0.5 * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) /
                                 static_cast<double>(overlap));
      } else if (bi + 1 < blocks.size() && i >= len - overlap) {
        const std::size_t j = i - (len - overlap);
        w = 0.5 + 0.5 * std::cos(std::numbers::pi * (static_cast<double>(j) + 0.5) /
                                 static_cast<double>(overlap));
      }
      out.signal[b + i] += w * kept[i];
    }
  }
  return out;
}

Recording denoise_recording(const Recording& rec, const DenoiseConfig& cfg,
                            std::vector<std::vector<BlockReport>>* report) {
  Recording out = rec;
  if (report) report->clear();
  for (auto& ch : out.channels) {
    auto res = denoise_channel(ch.samples, rec.sample_rate, rec.imu, cfg);
    ch.samples = std::move(res.signal);
    if (report) report->push_back(std::move(res.blocks));
  }
  return out;
}

}  // namespace earpipe
