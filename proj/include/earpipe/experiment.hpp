#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "earpipe/corpus.hpp"
#include "earpipe/features.hpp"
#include "earpipe/metrics.hpp"
#include "earpipe/models/model_io.hpp"
#include "earpipe/normalize.hpp"
#include "earpipe/pipeline.hpp"

namespace earpipe {

struct ExperimentConfig {
  CorpusConfig corpus;
  // Recording files; when non-empty they replace the synthetic corpus.
  std::vector<std::string> recordings;
  // Template file for NNMF separation; empty trains templates from the
  // synthetic corpus' ground-truth sources.
  std::string templates;
  StftConfig stft;
  NnmfConfig nnmf;
  PipelineConfig pipeline;
  int stride_s = 1;
  int ratio = 1;  // non-seizure epochs per seizure epoch in training folds
  NormalizationKind normalization = NormalizationKind::MinMax;
  models::ModelKind model = models::ModelKind::Svm;
  models::SvmConfig svm;
  int knn_k = 5;
  models::ForestConfig forest;
  models::CnnArch cnn_arch;
  models::TrainCfg cnn_train;
  // Master seed. Every stage seed (corpus, NNMF, VMD, balancing, forest, CNN)
  // is derived from it; see resolve_seeds.
  std::uint64_t seed = 0;
};

// Copy with every stage seed derived from cfg.seed.
ExperimentConfig resolve_seeds(ExperimentConfig cfg);

nlohmann::json to_json(const ExperimentConfig& cfg);

// Overlays `j` on `base`. Unknown keys are rejected so that typos surface.
ExperimentConfig experiment_from_json(const nlohmann::json& j, ExperimentConfig base = {});

struct Fold {
  std::string test_patient;
  std::vector<std::string> train_patients;
};

struct FoldPlan {
  std::vector<Fold> folds;
};

// One fold per distinct patient, ordered by patient id.
FoldPlan lopo_plan(const std::vector<std::string>& patient_ids);

struct FoldResult {
  std::string patient;
  Metrics metrics;
  bool specificity_only = false;  // held-out patient has no seizure epochs
  std::size_t n_train = 0;        // after balancing
  std::size_t n_test = 0;
  std::uint64_t normalizer_hash = 0;
};

struct Summary {
  double macro_accuracy = 0.0;         // mean of per-fold accuracy
  double macro_f1 = 0.0;               // mean seizure-class F1 over folds with seizures
  double macro_seizure_recall = 0.0;   // over folds with seizures
  double macro_non_seizure_rate = 0.0;
  Metrics micro;                       // pooled confusion matrix
};

Summary summarize(const std::vector<FoldResult>& folds);

struct ExperimentResult {
  std::vector<FoldResult> folds;
  Summary summary;
  nlohmann::json config;
};

// Separated recordings, one per patient, sorted by patient id.
struct PreparedCorpus {
  std::vector<Recording> separated;
};

FrequencyTemplate experiment_templates(const ExperimentConfig& cfg);
PreparedCorpus prepare_corpus(const ExperimentConfig& cfg);
FeatureTable corpus_features(const PreparedCorpus& corpus, int stride_s);

// Row indices of the fold's training and test patients.
std::vector<std::size_t> rows_of(const FeatureTable& table, const std::vector<std::string>& patients);

// Normalizer fitted on the fold's training rows only.
NormalizationParams fold_normalizer(const FeatureTable& all, const Fold& fold, NormalizationKind kind);

FoldResult evaluate_fold(const FeatureTable& all, const Fold& fold, std::size_t fold_index,
                         const ExperimentConfig& cfg, const PreparedCorpus* corpus = nullptr);

ExperimentResult evaluate_lopo(const FeatureTable& all, const ExperimentConfig& cfg,
                               const PreparedCorpus* corpus = nullptr);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentResult& r);
nlohmann::json to_json(const Summary& s);

enum class SweepAxis { Stride, Ratio, Motion };
std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view name);

struct SweepRow {
  std::string value;
  double accuracy = 0.0;
  double f1 = 0.0;
  double seizure_recall = 0.0;
};

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, SweepAxis axis);
std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows);

// Trains the configured model on a whole feature table (normalizer fitted on
// it, then balanced per the ratio).
models::StoredModel train_model(const FeatureTable& table, const ExperimentConfig& cfg);
std::vector<EpochLabel> predict(const models::StoredModel& model, const Eigen::MatrixXd& X);

// Raw 6 x window inputs for the CNN, one per window, in extract_features order.
std::vector<models::CnnExample> cnn_examples(const Recording& separated, const WindowSpec& spec);

// Per-channel mean/std over the examples, stored as a z-score normalizer with
// one entry per input channel.
NormalizationParams fit_channel_scaler(const std::vector<models::CnnExample>& examples);
void apply_channel_scaler(const NormalizationParams& p, std::vector<models::CnnExample>& examples);

// CNN on raw windows with its own seeded train/validation/test split.
models::StoredModel train_cnn_model(const std::vector<Recording>& separated,
                                    const ExperimentConfig& cfg, models::TrainReport* report = nullptr);
std::vector<EpochLabel> predict_cnn(const models::StoredModel& model,
                                    std::vector<models::CnnExample> examples);

// Resolved configuration plus tool identification, embedded in every output.
nlohmann::json provenance(const ExperimentConfig& cfg);

}  // namespace earpipe
