#include "earpipe/emd.hpp"

#include <algorithm>
#include <cmath>

#include "earpipe/error.hpp"

namespace earpipe {
namespace {

struct Knots {
  std::vector<double> x;
  std::vector<double> y;
};

// Extrema plus `m` of them reflected about each end of [0, n-1].
Knots mirrored_knots(std::span<const double> signal, const std::vector<std::size_t>& idx,
                     int m) {
  const std::size_t n = signal.size();
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(m), idx.size());
  Knots k;
  for (std::size_t j = count; j-- > 0;) {
    k.x.push_back(-static_cast<double>(idx[j]));
    k.y.push_back(signal[idx[j]]);
  }
  for (auto i : idx) {
    k.x.push_back(static_cast<double>(i));
    k.y.push_back(signal[i]);
  }
  const double end = static_cast<double>(n - 1);
  for (std::size_t j = 0; j < count; ++j) {
    const auto i = idx[idx.size() - 1 - j];
    k.x.push_back(2.0 * end - static_cast<double>(i));
    k.y.push_back(signal[i]);
  }
  return k;
}

bool can_sift(const Extrema& e) { return e.maxima.size() >= 2 && e.minima.size() >= 2; }

}  // namespace

void validate(const EmdConfig& cfg) {
  require(cfg.max_imfs >= 1, "emd: max_imfs must be >= 1");
  require(cfg.sd_threshold > 0, "emd: sd_threshold must be positive");
  require(cfg.max_sift_iters >= 1, "emd: max_sift_iters must be >= 1");
  require(cfg.mirrored_extrema >= 1, "emd: mirrored_extrema must be >= 1");
}

Signal ImfSet::reconstruct() const {
  Signal out = residual;
  for (const auto& imf : imfs) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += imf[i];
  }
  return out;
}

Extrema find_extrema(std::span<const double> x) {
  Extrema e;
  const std::size_t n = x.size();
  if (n < 3) return e;
  std::size_t i = 1;
  while (i + 1 < n) {
    // Extend over a plateau of equal values starting at i.
    std::size_t j = i;
    while (j + 1 < n && x[j + 1] == x[i]) ++j;
    if (j + 1 >= n) break;
    const double before = x[i - 1];
    const double after = x[j + 1];
    const std::size_t centre = (i + j) / 2;
    if (x[i] > before && x[i] > after) e.maxima.push_back(centre);
    else if (x[i] < before && x[i] < after) e.minima.push_back(centre);
    i = j + 1;
  }
  return e;
}

Signal cubic_spline(std::span<const double> kx, std::span<const double> ky, std::size_t n) {
  require(kx.size() == ky.size() && kx.size() >= 2, "cubic_spline: need at least two knots");
  const std::size_t m = kx.size();
  // Second derivatives with natural boundary conditions (Thomas algorithm).
  std::vector<double> h(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    h[i] = kx[i + 1] - kx[i];
    require(h[i] > 0, "cubic_spline: knots must be strictly increasing");
  }
  std::vector<double> M(m, 0.0);
  if (m > 2) {
    const std::size_t k = m - 2;
    std::vector<double> diag(k), upper(k), rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
      diag[i] = 2.0 * (h[i] + h[i + 1]);
      upper[i] = h[i + 1];
      rhs[i] = 6.0 * ((ky[i + 2] - ky[i + 1]) / h[i + 1] - (ky[i + 1] - ky[i]) / h[i]);
    }
    for (std::size_t i = 1; i < k; ++i) {
      const double w = h[i] / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    M[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) M[i + 1] = (rhs[i] - upper[i] * M[i + 2]) / diag[i];
  }

  Signal out(n);
  std::size_t seg = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double xt = static_cast<double>(t);
    while (seg + 2 < m && xt > kx[seg + 1]) ++seg;
    const double hs = h[seg];
    const double a = (kx[seg + 1] - xt) / hs;
    const double b = (xt - kx[seg]) / hs;
    out[t] = a * ky[seg] + b * ky[seg + 1] +
             ((a * a * a - a) * M[seg] + (b * b * b - b) * M[seg + 1]) * hs * hs / 6.0;
  }
  return out;
}

ImfSet emd_decompose(std::span<const double> x, const EmdConfig& cfg) {
  validate(cfg);
  for (double v : x) require(std::isfinite(v), "emd: input contains NaN or Inf");
  const std::size_t n = x.size();
  ImfSet out;
  out.residual.assign(x.begin(), x.end());

  while (static_cast<int>(out.imfs.size()) < cfg.max_imfs) {
    if (!can_sift(find_extrema(out.residual))) break;
    Signal h = out.residual;
    for (int it = 0; it < cfg.max_sift_iters; ++it) {
      const auto ext = find_extrema(h);
      if (!can_sift(ext)) break;
      const auto up = mirrored_knots(h, ext.maxima, cfg.mirrored_extrema);
      const auto lo = mirrored_knots(h, ext.minima, cfg.mirrored_extrema);
      const auto upper = cubic_spline(up.x, up.y, n);
      const auto lower = cubic_spline(lo.x, lo.y, n);
      double diff = 0.0;
      double energy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double mean = 0.5 * (upper[i] + lower[i]);
        energy += h[i] * h[i];
        diff += mean * mean;
        h[i] -= mean;
      }
      if (energy == 0.0 || diff / energy < cfg.sd_threshold) break;
    }
    for (std::size_t i = 0; i < n; ++i) out.residual[i] -= h[i];
    out.imfs.push_back(std::move(h));
  }
  return out;
}

ModalityAssignment assign_modalities(const ImfSet& set) {
  const std::size_t n = set.residual.size();
  const std::size_t count = set.imfs.size();
  ModalityAssignment a;
  a.emg = count >= 1 ? set.imfs[0] : Signal(n, 0.0);
  a.eeg = count >= 3 ? set.imfs[2] : Signal(n, 0.0);
  a.eog.assign(n, 0.0);
  for (std::size_t k = 3; k < std::min<std::size_t>(count, 6); ++k) {
    for (std::size_t i = 0; i < n; ++i) a.eog[i] += set.imfs[k][i];
  }
  a.partial_eog = count < 6;
  a.degenerate = count < 3;
  return a;
}

Recording separate_emd(const Recording& rec, const EmdConfig& cfg) {
  require(rec.has(ChannelRole::MixedLeft) && rec.has(ChannelRole::MixedRight),
          "separate_emd: MixedLeft and MixedRight channels required");
  const auto left = assign_modalities(emd_decompose(rec.channel(ChannelRole::MixedLeft), cfg));
  const auto right = assign_modalities(emd_decompose(rec.channel(ChannelRole::MixedRight), cfg));
  Recording out = rec;
  out.channels = {
      {ChannelRole::EegLeft, left.eeg},  {ChannelRole::EegRight, right.eeg},
      {ChannelRole::EmgLeft, left.emg},  {ChannelRole::EmgRight, right.emg},
      {ChannelRole::EogLeft, left.eog},  {ChannelRole::EogRight, right.eog},
  };
  return out;
}

}  // namespace earpipe
