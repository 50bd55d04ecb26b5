#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "earpipe/recording.hpp"
#include "earpipe/stft.hpp"

namespace earpipe {

// Template blocks are stored in this order.
enum class Modality { Eeg, Eog, Emg };
inline constexpr std::array<Modality, 3> kModalities = {Modality::Eeg, Modality::Eog,
                                                        Modality::Emg};
std::string_view to_string(Modality m);
std::optional<Modality> parse_modality(std::string_view name);

struct NnmfConfig {
  int r_eeg = 10;
  int r_eog = 10;
  int r_emg = 10;
  double beta = 0.0;  // 0 Itakura-Saito, 1 Kullback-Leibler, 2 Euclidean
  int max_iter = 200;
  double tol = 1e-6;  // relative divergence decrease
  double eps = 1e-12;
  std::uint64_t rng_seed = 0;

  int rank(Modality m) const;
};

void validate(const NnmfConfig& cfg);

// Elementwise sum of d_beta(x | y). beta = 2 uses the 1/2 (x - y)^2 form.
// For beta <= 1 every y must be positive, and for beta = 0 every x too.
double beta_divergence(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double beta);

// One multiplicative update of H (resp. W) for the beta-divergence, floored at eps.
void update_activations(const Eigen::MatrixXd& V, const Eigen::MatrixXd& W, Eigen::MatrixXd& H,
                        double beta, double eps);
void update_templates(const Eigen::MatrixXd& V, Eigen::MatrixXd& W, const Eigen::MatrixXd& H,
                      double beta, double eps);

struct NnmfFit {
  Eigen::MatrixXd W;
  Eigen::MatrixXd H;
  std::vector<double> divergence;  // after each iteration; [0] is the initial value
  int iterations = 0;
  bool converged = false;
};

// Full factorization V ~ W H with W and H both updated. V is floored at eps.
NnmfFit nnmf_fit(const Eigen::MatrixXd& V, int rank, const NnmfConfig& cfg);

// Activations for fixed templates W.
NnmfFit nnmf_activations(const Eigen::MatrixXd& V, const Eigen::MatrixXd& W,
                         const NnmfConfig& cfg);

struct FrequencyTemplate {
  Eigen::MatrixXd W;  // bins x components, columns sum to 1
  std::vector<Modality> column_modality;
  StftConfig stft;
  NnmfConfig nnmf;
  double sample_rate = kDefaultSampleRate;

  std::pair<Eigen::Index, Eigen::Index> columns(Modality m) const;  // [begin, end)
};

using ModalitySources = std::map<Modality, std::vector<Signal>>;

// Trains one block of templates per modality on the power spectrogram of its
// source signals (frames of several signals are concatenated).
FrequencyTemplate nnmf_train_templates(const ModalitySources& sources, double sample_rate,
                                       const StftConfig& stft_cfg = {},
                                       const NnmfConfig& nnmf_cfg = {});

struct NnmfSeparation {
  Signal eeg;
  Signal eog;
  Signal emg;
  int iterations = 0;

  const Signal& of(Modality m) const;
};

// Soft-mask separation of one mixed channel. Masks are P_s / sum P with an even
// split wherever every estimate is zero, so the outputs always add up to the
// mixture.
NnmfSeparation nnmf_separate(std::span<const double> mixed, double sample_rate,
                             const FrequencyTemplate& tpl, const NnmfConfig& cfg);
NnmfSeparation nnmf_separate(std::span<const double> mixed, double sample_rate,
                             const FrequencyTemplate& tpl);

// Masks for a power spectrogram, indexed like kModalities.
std::array<Eigen::MatrixXd, 3> separation_masks(const FrequencyTemplate& tpl,
                                                const Eigen::MatrixXd& H);

void save_template(const FrequencyTemplate& tpl, const std::filesystem::path& path);
FrequencyTemplate load_template(const std::filesystem::path& path);

// MixedLeft/MixedRight -> the six separated roles in canonical order.
Recording separate_nnmf(const Recording& rec, const FrequencyTemplate& tpl);

}  // namespace earpipe
