#include "earpipe/snr.hpp"

#include <cmath>

#include "earpipe/error.hpp"
#include "earpipe/spectral.hpp"

namespace earpipe {

double snr_db(std::span<const double> x, double sample_rate, double lo_hz, double hi_hz,
              const SnrConfig& cfg) {
  require(sample_rate > 0, "snr: sample_rate must be positive");
  require(lo_hz >= 0 && lo_hz < hi_hz && hi_hz <= sample_rate / 2,
          "snr: band must satisfy 0 <= lo < hi <= Nyquist");
  require(!x.empty(), "snr: empty signal");
  require(cfg.overlap >= 0 && cfg.overlap < 1, "snr: overlap must lie in [0, 1)");
  const auto seg = static_cast<std::size_t>(std::llround(cfg.segment_s * sample_rate));
  require(seg >= 2, "snr: Welch segment too short");
  const auto ov = static_cast<std::size_t>(std::llround(cfg.overlap * static_cast<double>(seg)));
  const auto psd = dsp::welch(x, sample_rate, seg, ov);
  double in_sum = 0.0, out_sum = 0.0;
  std::size_t in_n = 0, out_n = 0;
  for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k) {
    const double f = psd.freqs_hz[k];
    if (f >= lo_hz && f <= hi_hz) {
      in_sum += psd.power[k];
      ++in_n;
    } else {
      out_sum += psd.power[k];
      ++out_n;
    }
  }
  require(in_n > 0, "snr: band contains no frequency bins");
  require(out_n > 0, "snr: band covers the whole spectrum, nothing to compare against");
  const double in_mean = std::max(in_sum / static_cast<double>(in_n), cfg.floor);
  const double out_mean = std::max(out_sum / static_cast<double>(out_n), cfg.floor);
  return 10.0 * std::log10(in_mean / out_mean);
}

SnrReport snr_report(std::span<const double> x, double sample_rate, double lo_hz, double hi_hz,
                     const SnrConfig& cfg) {
  require(cfg.epoch_s > 0, "snr: epoch length must be positive");
  const auto epoch = static_cast<std::size_t>(std::llround(cfg.epoch_s * sample_rate));
  SnrReport r;
  r.lo_hz = lo_hz;
  r.hi_hz = hi_hz;
  if (x.size() <= epoch) {
    r.epoch_db.push_back(snr_db(x, sample_rate, lo_hz, hi_hz, cfg));
  } else {
    for (std::size_t b = 0; b + epoch <= x.size(); b += epoch) {
      r.epoch_db.push_back(snr_db(x.subspan(b, epoch), sample_rate, lo_hz, hi_hz, cfg));
    }
  }
  double sum = 0.0;
  for (double v : r.epoch_db) sum += v;
  r.mean_db = sum / static_cast<double>(r.epoch_db.size());
  return r;
}

SnrComparison compare_snr(std::span<const double> raw, std::span<const double> reconstructed,
                          double sample_rate, const std::vector<Band>& bands, const SnrConfig& cfg) {
  require(raw.size() == reconstructed.size(), "compare_snr: signals differ in length");
  SnrComparison c;
  for (const auto& b : bands) {
    const double hi = b.hi_clamped(sample_rate);
    c.raw.push_back(snr_report(raw, sample_rate, b.lo_hz, hi, cfg));
    c.reconstructed.push_back(snr_report(reconstructed, sample_rate, b.lo_hz, hi, cfg));
    c.delta_db.push_back(c.reconstructed.back().mean_db - c.raw.back().mean_db);
  }
  return c;
}

nlohmann::json to_json(const SnrReport& r) {
  return {{"band_hz", {r.lo_hz, r.hi_hz}}, {"epoch_db", r.epoch_db}, {"mean_db", r.mean_db}};
}

nlohmann::json to_json(const SnrComparison& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < c.raw.size(); ++i) {
    rows.push_back({{"raw", to_json(c.raw[i])},
                    {"reconstructed", to_json(c.reconstructed[i])},
                    {"delta_db", c.delta_db[i]}});
  }
  return rows;
}

}  // namespace earpipe
