#include "earpipe/nnmf.hpp"

#include <cmath>
#include <random>

#include "earpipe/container.hpp"
#include "earpipe/error.hpp"
#include "earpipe/synth.hpp"

namespace earpipe {

using Eigen::ArrayXXd;
using Eigen::MatrixXd;

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Eeg: return "eeg";
    case Modality::Eog: return "eog";
    case Modality::Emg: return "emg";
  }
  return "?";
}

std::optional<Modality> parse_modality(std::string_view name) {
  for (auto m : kModalities) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

int NnmfConfig::rank(Modality m) const {
  switch (m) {
    case Modality::Eeg: return r_eeg;
    case Modality::Eog: return r_eog;
    case Modality::Emg: return r_emg;
  }
  return 0;
}

void validate(const NnmfConfig& cfg) {
  require(cfg.r_eeg >= 1 && cfg.r_eog >= 1 && cfg.r_emg >= 1, "nnmf: every rank must be >= 1");
  require(cfg.beta == 0.0 || cfg.beta == 1.0 || cfg.beta == 2.0, "nnmf: beta must be 0, 1 or 2");
  require(cfg.max_iter >= 1, "nnmf: max_iter must be >= 1");
  require(cfg.tol >= 0, "nnmf: tol must be non-negative");
  require(cfg.eps > 0, "nnmf: eps must be positive");
}

double beta_divergence(const MatrixXd& X, const MatrixXd& Y, double beta) {
  require(X.rows() == Y.rows() && X.cols() == Y.cols(), "beta_divergence: shape mismatch");
  const ArrayXXd x = X.array();
  const ArrayXXd y = Y.array();
  require((x >= 0).all(), "beta_divergence: X must be nonnegative");
  if (beta == 2.0) return 0.5 * (x - y).square().sum();
  require((y > 0).all(), "beta_divergence: Y must be positive (apply an eps floor)");
  if (beta == 1.0) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double xi = x.data()[i];
      const double yi = y.data()[i];
      d += (xi > 0 ? xi * std::log(xi / yi) : 0.0) - xi + yi;
    }
    return d;
  }
  if (beta == 0.0) {
    require((x > 0).all(), "beta_divergence: Itakura-Saito needs positive X");
    const ArrayXXd q = x / y;
    return (q - q.log() - 1.0).sum();
  }
  throw_parameter("beta_divergence: beta must be 0, 1 or 2");
}

namespace {

// Numerator and denominator operands of the multiplicative rule.
std::pair<ArrayXXd, ArrayXXd> mu_terms(const MatrixXd& V, const MatrixXd& WH, double beta,
                                       double eps) {
  const ArrayXXd L = WH.array().max(eps);
  if (beta == 0.0) {
    const ArrayXXd inv = L.inverse();
    return {V.array() * inv.square(), inv};
  }
  if (beta == 1.0) return {V.array() / L, ArrayXXd::Ones(L.rows(), L.cols())};
  return {V.array(), L};
}

MatrixXd random_positive(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = 1.0 - unit(rng);  // (0, 1]
  }
  return m;
}

bool should_stop(const std::vector<double>& trace, double tol) {
  const double prev = trace[trace.size() - 2];
  const double cur = trace.back();
  if (prev <= 0) return true;
  return (prev - cur) / prev < tol;
}

}  // namespace

void update_activations(const MatrixXd& V, const MatrixXd& W, MatrixXd& H, double beta,
                        double eps) {
  const auto [a, b] = mu_terms(V, W * H, beta, eps);
  const MatrixXd num = W.transpose() * a.matrix();
  const MatrixXd den = W.transpose() * b.matrix();
  H = (H.array() * num.array() / den.array().max(eps)).max(eps).matrix();
}

void update_templates(const MatrixXd& V, MatrixXd& W, const MatrixXd& H, double beta,
                      double eps) {
  const auto [a, b] = mu_terms(V, W * H, beta, eps);
  const MatrixXd num = a.matrix() * H.transpose();
  const MatrixXd den = b.matrix() * H.transpose();
  W = (W.array() * num.array() / den.array().max(eps)).max(eps).matrix();
}

NnmfFit nnmf_fit(const MatrixXd& V, int rank, const NnmfConfig& cfg) {
  validate(cfg);
  require(rank >= 1, "nnmf_fit: rank must be >= 1");
  require(V.size() > 0, "nnmf_fit: empty matrix");
  require((V.array() >= 0).all(), "nnmf_fit: V must be nonnegative");
  const MatrixXd Vf = V.array().max(cfg.eps).matrix();
  std::mt19937_64 rng(cfg.rng_seed);
  NnmfFit fit;
  fit.W = random_positive(V.rows(), rank, rng);
  fit.H = random_positive(rank, V.cols(), rng);
  fit.divergence.push_back(beta_divergence(Vf, (fit.W * fit.H).array().max(cfg.eps).matrix(), cfg.beta));
  for (int it = 0; it < cfg.max_iter; ++it) {
    update_activations(Vf, fit.W, fit.H, cfg.beta, cfg.eps);
    update_templates(Vf, fit.W, fit.H, cfg.beta, cfg.eps);
    fit.divergence.push_back(
        beta_divergence(Vf, (fit.W * fit.H).array().max(cfg.eps).matrix(), cfg.beta));
    fit.iterations = it + 1;
    if (should_stop(fit.divergence, cfg.tol)) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

NnmfFit nnmf_activations(const MatrixXd& V, const MatrixXd& W, const NnmfConfig& cfg) {
  validate(cfg);
  require(V.rows() == W.rows(), "nnmf_activations: bin count of V and W differ");
  require((V.array() >= 0).all(), "nnmf_activations: V must be nonnegative");
  const MatrixXd Vf = V.array().max(cfg.eps).matrix();
  std::mt19937_64 rng(derive_seed(cfg.rng_seed, 1));
  NnmfFit fit;
  fit.W = W;
  fit.H = random_positive(W.cols(), V.cols(), rng);
  fit.divergence.push_back(beta_divergence(Vf, (W * fit.H).array().max(cfg.eps).matrix(), cfg.beta));
  for (int it = 0; it < cfg.max_iter; ++it) {
    update_activations(Vf, W, fit.H, cfg.beta, cfg.eps);
    fit.divergence.push_back(
        beta_divergence(Vf, (W * fit.H).array().max(cfg.eps).matrix(), cfg.beta));
    fit.iterations = it + 1;
    if (should_stop(fit.divergence, cfg.tol)) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

std::pair<Eigen::Index, Eigen::Index> FrequencyTemplate::columns(Modality m) const {
  Eigen::Index begin = -1;
  Eigen::Index end = -1;
  for (std::size_t j = 0; j < column_modality.size(); ++j) {
    if (column_modality[j] != m) continue;
    if (begin < 0) begin = static_cast<Eigen::Index>(j);
    end = static_cast<Eigen::Index>(j) + 1;
  }
  if (begin < 0) return {0, 0};
  return {begin, end};
}

FrequencyTemplate nnmf_train_templates(const ModalitySources& sources, double sample_rate,
                                       const StftConfig& stft_cfg, const NnmfConfig& nnmf_cfg) {
  validate(nnmf_cfg);
  validate(stft_cfg);
  const auto bins = static_cast<Eigen::Index>(stft_cfg.window_len / 2 + 1);
  FrequencyTemplate tpl;
  tpl.stft = stft_cfg;
  tpl.nnmf = nnmf_cfg;
  tpl.sample_rate = sample_rate;

  std::vector<MatrixXd> blocks;
  Eigen::Index total_cols = 0;
  for (auto m : kModalities) {
    const auto it = sources.find(m);
    require(it != sources.end() && !it->second.empty(),
            "nnmf_train_templates: no source signal for " + std::string(to_string(m)));
    std::vector<MatrixXd> parts;
    Eigen::Index frames = 0;
    for (const auto& sig : it->second) {
      parts.push_back(stft(sig, sample_rate, stft_cfg).power());
      frames += parts.back().cols();
    }
    MatrixXd V(bins, frames);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      V.middleCols(at, p.cols()) = p;
      at += p.cols();
    }
    if (V.maxCoeff() <= 0) {
      throw_degenerate("nnmf_train_templates: " + std::string(to_string(m)) +
                       " source is all zero");
    }
    NnmfConfig cfg = nnmf_cfg;
    cfg.rng_seed = derive_seed(nnmf_cfg.rng_seed, static_cast<std::uint64_t>(m) + 100);
    auto fit = nnmf_fit(V, nnmf_cfg.rank(m), cfg);
    for (Eigen::Index j = 0; j < fit.W.cols(); ++j) fit.W.col(j) /= fit.W.col(j).sum();
    for (int j = 0; j < nnmf_cfg.rank(m); ++j) tpl.column_modality.push_back(m);
    total_cols += fit.W.cols();
    blocks.push_back(std::move(fit.W));
  }
  tpl.W.resize(bins, total_cols);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    tpl.W.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return tpl;
}

const Signal& NnmfSeparation::of(Modality m) const {
  switch (m) {
    case Modality::Eeg: return eeg;
    case Modality::Eog: return eog;
    case Modality::Emg: return emg;
  }
  return eeg;
}

std::array<MatrixXd, 3> separation_masks(const FrequencyTemplate& tpl, const MatrixXd& H) {
  require(H.rows() == tpl.W.cols(), "separation_masks: activation rows do not match templates");
  std::array<MatrixXd, 3> power;
  for (std::size_t s = 0; s < 3; ++s) {
    const auto [b, e] = tpl.columns(kModalities[s]);
    power[s] = tpl.W.middleCols(b, e - b) * H.middleRows(b, e - b);
  }
  const MatrixXd total = power[0] + power[1] + power[2];
  std::array<MatrixXd, 3> masks;
  for (std::size_t s = 0; s < 3; ++s) {
    masks[s] = MatrixXd(total.rows(), total.cols());
    for (Eigen::Index j = 0; j < total.cols(); ++j) {
      for (Eigen::Index i = 0; i < total.rows(); ++i) {
        const double t = total(i, j);
        masks[s](i, j) = t > 0 ? power[s](i, j) / t : 1.0 / 3.0;
      }
    }
  }
  return masks;
}

NnmfSeparation nnmf_separate(std::span<const double> mixed, double sample_rate,
                             const FrequencyTemplate& tpl, const NnmfConfig& cfg) {
  require(static_cast<Eigen::Index>(tpl.stft.window_len / 2 + 1) == tpl.W.rows(),
          "nnmf_separate: template bin count does not match its STFT configuration");
  require(std::abs(sample_rate - tpl.sample_rate) < 1e-9,
          "nnmf_separate: template was trained at a different sample rate");
  const auto spec = stft(mixed, sample_rate, tpl.stft);
  require(spec.bins() == tpl.W.rows(), "nnmf_separate: bin count mismatch");
  const auto fit = nnmf_activations(spec.power(), tpl.W, cfg);
  const auto masks = separation_masks(tpl, fit.H);
  NnmfSeparation out;
  out.iterations = fit.iterations;
  Signal* dest[3] = {&out.eeg, &out.eog, &out.emg};
  for (std::size_t s = 0; s < 3; ++s) {
    const Eigen::MatrixXcd masked = spec.complex.array() * masks[s].array().cast<std::complex<double>>();
    *dest[s] = istft(masked, spec);
  }
  return out;
}

NnmfSeparation nnmf_separate(std::span<const double> mixed, double sample_rate,
                             const FrequencyTemplate& tpl) {
  return nnmf_separate(mixed, sample_rate, tpl, tpl.nnmf);
}

void save_template(const FrequencyTemplate& tpl, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "earpipe.template";
  header["version"] = 1;
  header["sample_rate"] = tpl.sample_rate;
  header["stft"] = {{"window_len", tpl.stft.window_len}, {"hop", tpl.stft.hop}};
  header["nnmf"] = {{"r_eeg", tpl.nnmf.r_eeg}, {"r_eog", tpl.nnmf.r_eog},
                    {"r_emg", tpl.nnmf.r_emg}, {"beta", tpl.nnmf.beta},
                    {"max_iter", tpl.nnmf.max_iter}, {"tol", tpl.nnmf.tol},
                    {"eps", tpl.nnmf.eps}, {"rng_seed", tpl.nnmf.rng_seed}};
  header["bins"] = tpl.W.rows();
  header["components"] = tpl.W.cols();
  nlohmann::json ranges = nlohmann::json::object();
  for (auto m : kModalities) {
    const auto [b, e] = tpl.columns(m);
    ranges[std::string(to_string(m))] = {b, e};
  }
  header["columns"] = ranges;
  container::write(path, header, std::span<const double>(tpl.W.data(), static_cast<std::size_t>(tpl.W.size())));
}

FrequencyTemplate load_template(const std::filesystem::path& path) {
  auto c = container::read(path);
  const auto& h = c.header;
  try {
    if (h.at("format") != "earpipe.template") throw_parse("load_template: not a template file");
    FrequencyTemplate tpl;
    tpl.sample_rate = h.at("sample_rate").get<double>();
    tpl.stft.window_len = h.at("stft").at("window_len").get<std::size_t>();
    tpl.stft.hop = h.at("stft").at("hop").get<std::size_t>();
    const auto& n = h.at("nnmf");
    tpl.nnmf.r_eeg = n.at("r_eeg").get<int>();
    tpl.nnmf.r_eog = n.at("r_eog").get<int>();
    tpl.nnmf.r_emg = n.at("r_emg").get<int>();
    tpl.nnmf.beta = n.at("beta").get<double>();
    tpl.nnmf.max_iter = n.at("max_iter").get<int>();
    tpl.nnmf.tol = n.at("tol").get<double>();
    tpl.nnmf.eps = n.at("eps").get<double>();
    tpl.nnmf.rng_seed = n.at("rng_seed").get<std::uint64_t>();
    const auto bins = h.at("bins").get<Eigen::Index>();
    const auto comps = h.at("components").get<Eigen::Index>();
    if (static_cast<std::size_t>(bins * comps) != c.payload.size()) {
      throw_parse("load_template: payload size does not match bins x components");
    }
    tpl.W = Eigen::Map<const MatrixXd>(c.payload.data(), bins, comps);
    tpl.column_modality.assign(static_cast<std::size_t>(comps), Modality::Eeg);
    for (auto m : kModalities) {
      const auto r = h.at("columns").at(std::string(to_string(m)));
      const auto b = r.at(0).get<Eigen::Index>();
      const auto e = r.at(1).get<Eigen::Index>();
      if (b < 0 || e < b || e > comps) throw_parse("load_template: bad column range");
      for (Eigen::Index j = b; j < e; ++j) tpl.column_modality[static_cast<std::size_t>(j)] = m;
    }
    validate(tpl.nnmf);
    validate(tpl.stft);
    return tpl;
  } catch (const nlohmann::json::exception& e) {
    throw_parse("load_template: malformed header: " + std::string(e.what()));
  }
}

Recording separate_nnmf(const Recording& rec, const FrequencyTemplate& tpl) {
  require(rec.has(ChannelRole::MixedLeft) && rec.has(ChannelRole::MixedRight),
          "separate_nnmf: MixedLeft and MixedRight channels required");
  const auto left = nnmf_separate(rec.channel(ChannelRole::MixedLeft), rec.sample_rate, tpl);
  const auto right = nnmf_separate(rec.channel(ChannelRole::MixedRight), rec.sample_rate, tpl);
  Recording out = rec;
  out.channels = {
      {ChannelRole::EegLeft, left.eeg},  {ChannelRole::EegRight, right.eeg},
      {ChannelRole::EmgLeft, left.emg},  {ChannelRole::EmgRight, right.emg},
      {ChannelRole::EogLeft, left.eog},  {ChannelRole::EogRight, right.eog},
  };
  return out;
}

}  // namespace earpipe
