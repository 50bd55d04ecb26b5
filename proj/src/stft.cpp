#include "earpipe/stft.hpp"

#include <cmath>

#include "earpipe/error.hpp"
#include "earpipe/fft.hpp"
#include "earpipe/spectral.hpp"

namespace earpipe {

void validate(const StftConfig& cfg) {
  require(cfg.window_len >= 2, "stft: window_len must be >= 2");
  require(cfg.hop > 0 && cfg.hop <= cfg.window_len, "stft: need 0 < hop <= window_len");
  const auto w = dsp::hann(cfg.window_len);
  std::vector<double> sums(cfg.hop, 0.0);
  for (std::size_t i = 0; i < cfg.window_len; ++i) sums[i % cfg.hop] += w[i];
  const double ref = sums[0];
  for (double s : sums) {
    require(std::abs(s - ref) <= 1e-10 * std::max(1.0, ref),
            "stft: Hann window with this hop is not constant overlap-add");
  }
}

double Spectrogram::frame_s(Eigen::Index m) const {
  const double centre = static_cast<double>(m) * static_cast<double>(cfg.hop) -
                        static_cast<double>(pad_front) + 0.5 * static_cast<double>(cfg.window_len);
  return centre / sample_rate;
}

Spectrogram stft(std::span<const double> x, double sample_rate, const StftConfig& cfg) {
  validate(cfg);
  require(sample_rate > 0, "stft: sample_rate must be positive");
  const std::size_t N = cfg.window_len;
  const std::size_t H = cfg.hop;
  const std::size_t n = x.size();

  Spectrogram spec;
  spec.cfg = cfg;
  spec.sample_rate = sample_rate;
  spec.n_samples = n;
  spec.pad_front = N - H;

  const std::size_t last = spec.pad_front + (n ? n - 1 : 0);
  const std::size_t frames = (last + H - 1) / H + 1;
  Signal padded((frames - 1) * H + N, 0.0);
  std::copy(x.begin(), x.end(), padded.begin() + static_cast<std::ptrdiff_t>(spec.pad_front));

  const auto w = dsp::hann(N);
  const std::size_t bins = N / 2 + 1;
  spec.complex.resize(static_cast<Eigen::Index>(bins), static_cast<Eigen::Index>(frames));
  Signal frame(N);
  for (std::size_t m = 0; m < frames; ++m) {
    for (std::size_t i = 0; i < N; ++i) frame[i] = padded[m * H + i] * w[i];
    const auto s = fft::rfft(frame);
    for (std::size_t k = 0; k < bins; ++k) {
      spec.complex(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = s[k];
    }
  }
  return spec;
}

Signal istft(const Eigen::MatrixXcd& complex, const Spectrogram& layout) {
  const std::size_t N = layout.cfg.window_len;
  const std::size_t H = layout.cfg.hop;
  require(complex.rows() == static_cast<Eigen::Index>(N / 2 + 1) &&
              complex.cols() == layout.complex.cols(),
          "istft: spectrogram shape does not match its layout");
  const auto frames = static_cast<std::size_t>(complex.cols());
  const std::size_t total = frames ? (frames - 1) * H + N : 0;
  Signal acc(total, 0.0);
  Signal wsum(total, 0.0);
  const auto w = dsp::hann(N);
  std::vector<fft::cplx> bins(N / 2 + 1);
  for (std::size_t m = 0; m < frames; ++m) {
    for (std::size_t k = 0; k < bins.size(); ++k) {
      bins[k] = complex(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
    }
    const auto frame = fft::irfft(bins, N);
    for (std::size_t i = 0; i < N; ++i) {
      acc[m * H + i] += w[i] * frame[i];
      wsum[m * H + i] += w[i] * w[i];
    }
  }
  Signal out(layout.n_samples, 0.0);
  for (std::size_t i = 0; i < layout.n_samples; ++i) {
    const std::size_t p = layout.pad_front + i;
    if (p < total && wsum[p] > 1e-12) out[i] = acc[p] / wsum[p];
  }
  return out;
}

Signal istft(const Spectrogram& spec) { return istft(spec.complex, spec); }

}  // namespace earpipe
