#include "earpipe/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <future>
#include <set>
#include <sstream>

#include "earpipe/error.hpp"
#include "earpipe/models/labels.hpp"

namespace earpipe {

using nlohmann::json;

namespace {

constexpr const char* kToolName = "earpipe";
constexpr const char* kToolVersion = "0.1.0";

// Reads known keys of one JSON object and rejects the rest.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw_parameter("config: '" + where_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw_parameter("config: " + path(key) + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const char* key) const { return where_.empty() ? key : where_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw_parameter("config: unknown key '" + (where_.empty() ? k : where_ + "." + k) + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string_view init_name(VmdInit i) {
  switch (i) {
    case VmdInit::Uniform: return "uniform";
    case VmdInit::Zero: return "zero";
    case VmdInit::Random: return "random";
  }
  return "?";
}

VmdInit parse_init(std::string_view s) {
  for (auto i : {VmdInit::Uniform, VmdInit::Zero, VmdInit::Random}) {
    if (init_name(i) == s) return i;
  }
  throw_parameter("config: vmd init must be uniform, zero or random");
}

json corpus_json(const CorpusConfig& c) {
  return {{"n_patients", c.n_patients},
          {"duration_s", c.duration_s},
          {"sample_rate", c.sample_rate},
          {"imu_rate", c.imu_rate},
          {"seizure_amplitude_mv", c.seizure_amplitude_mv},
          {"motion_amplitude_mv", c.motion_amplitude_mv},
          {"motion_bursts", c.motion_bursts},
          {"step_rate_hz", c.step_rate_hz},
          {"alpha_amplitude_mv", c.alpha_amplitude_mv},
          {"blink_amplitude_mv", c.blink_amplitude_mv},
          {"chew_amplitude_mv", c.chew_amplitude_mv},
          {"background_mv", c.background_mv},
          {"mains_mv", c.mains_mv},
          {"mains_hz", c.mains_hz}};
}

void corpus_from(const json& j, CorpusConfig& c) {
  Fields f(j, "corpus");
  f.get("n_patients", c.n_patients);
  f.get("duration_s", c.duration_s);
  f.get("sample_rate", c.sample_rate);
  f.get("imu_rate", c.imu_rate);
  f.get("seizure_amplitude_mv", c.seizure_amplitude_mv);
  f.get("motion_amplitude_mv", c.motion_amplitude_mv);
  f.get("motion_bursts", c.motion_bursts);
  f.get("step_rate_hz", c.step_rate_hz);
  f.get("alpha_amplitude_mv", c.alpha_amplitude_mv);
  f.get("blink_amplitude_mv", c.blink_amplitude_mv);
  f.get("chew_amplitude_mv", c.chew_amplitude_mv);
  f.get("background_mv", c.background_mv);
  f.get("mains_mv", c.mains_mv);
  f.get("mains_hz", c.mains_hz);
  f.finish();
}

json pipeline_json(const PipelineConfig& p) {
  const auto& v = p.denoise.vmd;
  json bp = nullptr;
  if (p.preprocess.bandpass) bp = {p.preprocess.bandpass->first, p.preprocess.bandpass->second};
  return {{"mains_hz", p.preprocess.mains_hz},
          {"notch_q", p.preprocess.notch_q},
          {"outlier_sigma", p.preprocess.outlier_sigma},
          {"bandpass", bp},
          {"motion_removal", p.motion_removal},
          {"vmd",
           {{"k_modes", v.k_modes},
            {"alpha", v.alpha},
            {"tau", v.tau},
            {"tol", v.tol},
            {"max_iter", v.max_iter},
            {"init", init_name(v.init)}}},
          {"corr_threshold", p.denoise.corr_threshold},
          {"block_s", p.denoise.block_s},
          {"overlap_s", p.denoise.overlap_s},
          {"separation", to_string(p.separation)},
          {"emd",
           {{"max_imfs", p.emd.max_imfs},
            {"sd_threshold", p.emd.sd_threshold},
            {"max_sift_iters", p.emd.max_sift_iters},
            {"mirrored_extrema", p.emd.mirrored_extrema}}}};
}

void pipeline_from(const json& j, PipelineConfig& p) {
  Fields f(j, "pipeline");
  f.get("mains_hz", p.preprocess.mains_hz);
  f.get("notch_q", p.preprocess.notch_q);
  f.get("outlier_sigma", p.preprocess.outlier_sigma);
  if (const auto* bp = f.sub("bandpass")) {
    if (bp->is_null()) {
      p.preprocess.bandpass.reset();
    } else {
      const auto v = bp->get<std::vector<double>>();
      require(v.size() == 2, "config: pipeline.bandpass must be [lo, hi] or null");
      p.preprocess.bandpass = std::make_pair(v[0], v[1]);
    }
  }
  f.get("motion_removal", p.motion_removal);
  if (const auto* vj = f.sub("vmd")) {
    Fields v(*vj, "pipeline.vmd");
    auto& c = p.denoise.vmd;
    v.get("k_modes", c.k_modes);
    v.get("alpha", c.alpha);
    v.get("tau", c.tau);
    v.get("tol", c.tol);
    v.get("max_iter", c.max_iter);
    std::string init{init_name(c.init)};
    v.get("init", init);
    c.init = parse_init(init);
    v.finish();
  }
  f.get("corr_threshold", p.denoise.corr_threshold);
  f.get("block_s", p.denoise.block_s);
  f.get("overlap_s", p.denoise.overlap_s);
  std::string sep{to_string(p.separation)};
  f.get("separation", sep);
  p.separation = parse_separation(sep);
  if (const auto* ej = f.sub("emd")) {
    Fields e(*ej, "pipeline.emd");
    e.get("max_imfs", p.emd.max_imfs);
    e.get("sd_threshold", p.emd.sd_threshold);
    e.get("max_sift_iters", p.emd.max_sift_iters);
    e.get("mirrored_extrema", p.emd.mirrored_extrema);
    e.finish();
  }
  f.finish();
}

json arch_json(const models::CnnArch& a) {
  return {{"in_channels", a.in_channels}, {"in_length", a.in_length}, {"filters", a.filters},
          {"kernel", a.kernel}, {"hidden", a.hidden}, {"dropout", a.dropout}};
}

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Seed streams below the fold range; folds use 1000 + index.
enum SeedStream : std::uint64_t {
  kCorpusStream = 1,
  kNnmfStream = 2,
  kVmdStream = 3,
  kForestStream = 4,
  kCnnStream = 5,
  kTrainBalanceStream = 6,
  kFoldStream = 1000,
};

[[noreturn]] void rethrow_with(const std::string& context, const Error& e) {
  throw Error(e.kind(), context + ": " + e.what());
}

}  // namespace

ExperimentConfig resolve_seeds(ExperimentConfig cfg) {
  cfg.corpus.seed = derive_seed(cfg.seed, kCorpusStream);
  cfg.nnmf.rng_seed = derive_seed(cfg.seed, kNnmfStream);
  cfg.pipeline.denoise.vmd.seed = derive_seed(cfg.seed, kVmdStream);
  cfg.forest.seed = derive_seed(cfg.seed, kForestStream);
  cfg.cnn_train.seed = derive_seed(cfg.seed, kCnnStream);
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  const auto& s = cfg.svm;
  const auto& t = cfg.cnn_train;
  return {{"corpus", corpus_json(cfg.corpus)},
          {"recordings", cfg.recordings},
          {"templates", cfg.templates},
          {"stft", {{"window_len", cfg.stft.window_len}, {"hop", cfg.stft.hop}}},
          {"nnmf",
           {{"r_eeg", cfg.nnmf.r_eeg},
            {"r_eog", cfg.nnmf.r_eog},
            {"r_emg", cfg.nnmf.r_emg},
            {"beta", cfg.nnmf.beta},
            {"max_iter", cfg.nnmf.max_iter},
            {"tol", cfg.nnmf.tol},
            {"eps", cfg.nnmf.eps}}},
          {"pipeline", pipeline_json(cfg.pipeline)},
          {"stride_s", cfg.stride_s},
          {"ratio", ratio_string(BalanceSpec{cfg.ratio, 0})},
          {"normalization", to_string(cfg.normalization)},
          {"model", models::to_string(cfg.model)},
          {"svm",
           {{"gamma", s.gamma},
            {"C", s.C},
            {"tol", s.tol},
            {"max_iter", s.max_iter},
            {"dense_kernel_limit", s.dense_kernel_limit}}},
          {"knn", {{"k", cfg.knn_k}}},
          {"rfc",
           {{"n_trees", cfg.forest.n_trees},
            {"max_depth", cfg.forest.max_depth},
            {"max_features", cfg.forest.max_features},
            {"bootstrap", cfg.forest.bootstrap}}},
          {"cnn",
           {{"arch", arch_json(cfg.cnn_arch)},
            {"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"lr", t.adam.lr},
            {"test_fraction", t.test_fraction},
            {"val_fraction", t.val_fraction},
            {"gamma_focus", t.gamma_focus}}},
          {"seed", cfg.seed}};
}

ExperimentConfig experiment_from_json(const json& j, ExperimentConfig cfg) {
  try {
    Fields f(j, "");
    if (const auto* c = f.sub("corpus")) corpus_from(*c, cfg.corpus);
    f.get("recordings", cfg.recordings);
    f.get("templates", cfg.templates);
    if (const auto* sj = f.sub("stft")) {
      Fields s(*sj, "stft");
      s.get("window_len", cfg.stft.window_len);
      s.get("hop", cfg.stft.hop);
      s.finish();
    }
    if (const auto* nj = f.sub("nnmf")) {
      Fields n(*nj, "nnmf");
      n.get("r_eeg", cfg.nnmf.r_eeg);
      n.get("r_eog", cfg.nnmf.r_eog);
      n.get("r_emg", cfg.nnmf.r_emg);
      n.get("beta", cfg.nnmf.beta);
      n.get("max_iter", cfg.nnmf.max_iter);
      n.get("tol", cfg.nnmf.tol);
      n.get("eps", cfg.nnmf.eps);
      n.finish();
    }
    if (const auto* pj = f.sub("pipeline")) pipeline_from(*pj, cfg.pipeline);
    f.get("stride_s", cfg.stride_s);
    std::string ratio = ratio_string(BalanceSpec{cfg.ratio, 0});
    f.get("ratio", ratio);
    cfg.ratio = parse_ratio(ratio).non_seizure_per_seizure;
    std::string norm{to_string(cfg.normalization)};
    f.get("normalization", norm);
    cfg.normalization = parse_normalization(norm);
    std::string model{models::to_string(cfg.model)};
    f.get("model", model);
    cfg.model = models::parse_model_kind(model);
    if (const auto* sj = f.sub("svm")) {
      Fields s(*sj, "svm");
      s.get("gamma", cfg.svm.gamma);
      s.get("C", cfg.svm.C);
      s.get("tol", cfg.svm.tol);
      s.get("max_iter", cfg.svm.max_iter);
      s.get("dense_kernel_limit", cfg.svm.dense_kernel_limit);
      s.finish();
    }
    if (const auto* kj = f.sub("knn")) {
      Fields k(*kj, "knn");
      k.get("k", cfg.knn_k);
      k.finish();
    }
    if (const auto* rj = f.sub("rfc")) {
      Fields r(*rj, "rfc");
      r.get("n_trees", cfg.forest.n_trees);
      r.get("max_depth", cfg.forest.max_depth);
      r.get("max_features", cfg.forest.max_features);
      r.get("bootstrap", cfg.forest.bootstrap);
      r.finish();
    }
    if (const auto* cj = f.sub("cnn")) {
      Fields c(*cj, "cnn");
      if (const auto* aj = c.sub("arch")) {
        Fields a(*aj, "cnn.arch");
        a.get("in_channels", cfg.cnn_arch.in_channels);
        a.get("in_length", cfg.cnn_arch.in_length);
        a.get("filters", cfg.cnn_arch.filters);
        a.get("kernel", cfg.cnn_arch.kernel);
        a.get("hidden", cfg.cnn_arch.hidden);
        a.get("dropout", cfg.cnn_arch.dropout);
        a.finish();
      }
      c.get("epochs", cfg.cnn_train.epochs);
      c.get("batch_size", cfg.cnn_train.batch_size);
      c.get("lr", cfg.cnn_train.adam.lr);
      c.get("test_fraction", cfg.cnn_train.test_fraction);
      c.get("val_fraction", cfg.cnn_train.val_fraction);
      c.get("gamma_focus", cfg.cnn_train.gamma_focus);
      c.finish();
    }
    f.get("seed", cfg.seed);
    f.finish();
  } catch (const json::exception& e) {
    throw_parameter(std::string("config: ") + e.what());
  }
  return cfg;
}

json provenance(const ExperimentConfig& cfg) {
  return {{"tool", kToolName}, {"version", kToolVersion}, {"seed", cfg.seed}, {"config", to_json(cfg)}};
}

FoldPlan lopo_plan(const std::vector<std::string>& patient_ids) {
  std::vector<std::string> ids = patient_ids;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) throw_parameter("lopo_plan: at least 2 patients are required");
  FoldPlan plan;
  for (const auto& test : ids) {
    Fold f;
    f.test_patient = test;
    for (const auto& other : ids) {
      if (other != test) f.train_patients.push_back(other);
    }
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

Summary summarize(const std::vector<FoldResult>& folds) {
  Summary s;
  if (folds.empty()) return s;
  Confusion pooled;
  std::size_t with_seizures = 0;
  for (const auto& f : folds) {
    pooled += f.metrics.cm;
    s.macro_accuracy += f.metrics.accuracy;
    s.macro_non_seizure_rate += f.metrics.non_seizure_rate;
    if (!f.specificity_only) {
      ++with_seizures;
      s.macro_f1 += f.metrics.seizure.f1;
      s.macro_seizure_recall += f.metrics.seizure_rate;
    }
  }
  const auto n = static_cast<double>(folds.size());
  s.macro_accuracy /= n;
  s.macro_non_seizure_rate /= n;
  if (with_seizures > 0) {
    s.macro_f1 /= static_cast<double>(with_seizures);
    s.macro_seizure_recall /= static_cast<double>(with_seizures);
  }
  s.micro = compute_metrics(pooled);
  return s;
}

FrequencyTemplate experiment_templates(const ExperimentConfig& cfg_in) {
  const auto cfg = resolve_seeds(cfg_in);
  if (!cfg.templates.empty()) return load_template(cfg.templates);
  return nnmf_train_templates(template_sources(cfg.corpus), cfg.corpus.sample_rate, cfg.stft, cfg.nnmf);
}

PreparedCorpus prepare_corpus(const ExperimentConfig& cfg_in) {
  const auto cfg = resolve_seeds(cfg_in);
  std::optional<FrequencyTemplate> tpl;
  if (cfg.pipeline.separation == SeparationMethod::Nnmf) tpl = experiment_templates(cfg);

  const std::size_t n = cfg.recordings.empty() ? static_cast<std::size_t>(cfg.corpus.n_patients)
                                               : cfg.recordings.size();
  if (cfg.recordings.empty()) validate(cfg.corpus);
  std::vector<std::future<Recording>> jobs;
  for (std::size_t i = 0; i < n; ++i) {
    jobs.push_back(std::async(std::launch::async, [&cfg, &tpl, i] {
      Recording raw = cfg.recordings.empty()
                          ? synthesize_recording(patient_spec(cfg.corpus, static_cast<int>(i)))
                          : load_recording(cfg.recordings[i]);
      try {
        return run_front_end(raw, cfg.pipeline, tpl ? &*tpl : nullptr);
      } catch (const Error& e) {
        rethrow_with("patient " + raw.patient_id, e);
      }
    }));
  }
  PreparedCorpus out;
  for (auto& j : jobs) out.separated.push_back(j.get());
  std::sort(out.separated.begin(), out.separated.end(),
            [](const Recording& a, const Recording& b) { return a.patient_id < b.patient_id; });
  return out;
}

FeatureTable corpus_features(const PreparedCorpus& corpus, int stride_s) {
  WindowSpec spec;
  spec.stride_s = stride_s;
  validate(spec);
  std::vector<std::future<FeatureTable>> jobs;
  for (const auto& rec : corpus.separated) {
    jobs.push_back(std::async(std::launch::async, [&rec, spec] { return extract_features(rec, spec); }));
  }
  FeatureTable all;
  for (auto& j : jobs) all.append(j.get());
  return all;
}

std::vector<std::size_t> rows_of(const FeatureTable& table, const std::vector<std::string>& patients) {
  const std::set<std::string> want(patients.begin(), patients.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (want.contains(table.patient_ids[i])) rows.push_back(i);
  }
  return rows;
}

NormalizationParams fold_normalizer(const FeatureTable& all, const Fold& fold, NormalizationKind kind) {
  const auto train = all.rows(rows_of(all, fold.train_patients));
  if (train.size() == 0) throw_degenerate("fold " + fold.test_patient + ": no training rows");
  return fit_normalizer(train.X, kind, "train patients of fold " + fold.test_patient);
}

namespace {

models::AnyModel fit_feature_model(const Eigen::MatrixXd& X, const std::vector<EpochLabel>& y,
                                   const ExperimentConfig& cfg) {
  switch (cfg.model) {
    case models::ModelKind::Svm: return models::svm_train(X, y, cfg.svm);
    case models::ModelKind::Knn: return models::knn_train(X, y, cfg.knn_k);
    case models::ModelKind::Rfc: return models::rfc_train(X, y, cfg.forest);
    case models::ModelKind::Cnn: break;
  }
  throw_parameter("cnn is trained on raw windows, not feature rows");
}

std::vector<EpochLabel> predict_any(const models::AnyModel& m, const Eigen::MatrixXd& X) {
  if (const auto* s = std::get_if<models::SvmModel>(&m)) return s->predict(X);
  if (const auto* k = std::get_if<models::KnnModel>(&m)) return k->predict(X);
  if (const auto* f = std::get_if<models::ForestModel>(&m)) return f->predict(X);
  throw_parameter("predict: cnn models take raw windows");
}

std::vector<models::CnnExample> corpus_examples(const PreparedCorpus& corpus,
                                                const std::vector<std::string>& patients,
                                                const WindowSpec& spec) {
  std::vector<models::CnnExample> out;
  const std::set<std::string> want(patients.begin(), patients.end());
  for (const auto& rec : corpus.separated) {
    if (!want.contains(rec.patient_id)) continue;
    auto ex = cnn_examples(rec, spec);
    out.insert(out.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
  }
  return out;
}

FoldResult evaluate_fold_impl(const FeatureTable& all, const Fold& fold, std::size_t fold_index,
                              const ExperimentConfig& cfg, const PreparedCorpus* corpus) {
  FoldResult r;
  r.patient = fold.test_patient;
  const auto train_rows = rows_of(all, fold.train_patients);
  const auto test_rows = rows_of(all, {fold.test_patient});
  const auto train = all.rows(train_rows);
  const auto test = all.rows(test_rows);
  r.n_test = test.size();
  r.specificity_only =
      std::none_of(test.labels.begin(), test.labels.end(), [](EpochLabel l) { return l == EpochLabel::Seizure; });

  const BalanceSpec bal{cfg.ratio, derive_seed(cfg.seed, kFoldStream + fold_index)};
  const auto keep = balance_indices(train.labels, bal);
  r.n_train = keep.size();
  std::vector<EpochLabel> predicted;

  if (cfg.model == models::ModelKind::Cnn) {
    require(corpus != nullptr, "cnn evaluation needs the separated recordings");
    WindowSpec spec;
    spec.stride_s = cfg.stride_s;
    auto train_ex = corpus_examples(*corpus, fold.train_patients, spec);
    auto test_ex = corpus_examples(*corpus, {fold.test_patient}, spec);
    require(train_ex.size() == train.size() && test_ex.size() == test.size(),
            "cnn windows do not line up with feature rows");
    std::vector<models::CnnExample> kept;
    for (auto i : keep) kept.push_back(std::move(train_ex[i]));
    const auto scaler = fit_channel_scaler(kept);
    r.normalizer_hash = params_hash(scaler);
    apply_channel_scaler(scaler, kept);
    auto tcfg = cfg.cnn_train;
    tcfg.seed = derive_seed(cfg.cnn_train.seed, fold_index);
    const auto fit = models::cnn_fit(kept, cfg.cnn_arch, tcfg);
    apply_channel_scaler(scaler, test_ex);
    for (const auto& e : test_ex) predicted.push_back(models::from_class(models::cnn_predict(fit.model, e.input)));
  } else {
    const auto norm = fit_normalizer(train.X, cfg.normalization, "train patients of fold " + fold.test_patient);
    r.normalizer_hash = params_hash(norm);
    const auto balanced = train.rows(keep);
    auto fcfg = cfg;
    fcfg.forest.seed = derive_seed(cfg.forest.seed, fold_index);
    const auto model = fit_feature_model(apply_normalizer(norm, balanced.X), balanced.labels, fcfg);
    predicted = predict_any(model, apply_normalizer(norm, test.X));
  }
  r.metrics = compute_metrics(confusion(test.labels, predicted));
  return r;
}

}  // namespace

FoldResult evaluate_fold(const FeatureTable& all, const Fold& fold, std::size_t fold_index,
                         const ExperimentConfig& cfg_in, const PreparedCorpus* corpus) {
  const auto cfg = resolve_seeds(cfg_in);
  try {
    return evaluate_fold_impl(all, fold, fold_index, cfg, corpus);
  } catch (const Error& e) {
    rethrow_with("fold " + fold.test_patient, e);
  }
}

ExperimentResult evaluate_lopo(const FeatureTable& all, const ExperimentConfig& cfg,
                               const PreparedCorpus* corpus) {
  const auto plan = lopo_plan(all.patient_ids);
  std::vector<std::future<FoldResult>> jobs;
  for (std::size_t i = 0; i < plan.folds.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      return evaluate_fold(all, plan.folds[i], i, cfg, corpus);
    }));
  }
  ExperimentResult out;
  for (auto& j : jobs) out.folds.push_back(j.get());
  out.summary = summarize(out.folds);
  out.config = provenance(cfg);
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto corpus = prepare_corpus(cfg);
  const auto table = corpus_features(corpus, cfg.stride_s);
  return evaluate_lopo(table, cfg, &corpus);
}

json to_json(const Summary& s) {
  return {{"macro_accuracy", s.macro_accuracy},
          {"macro_f1", s.macro_f1},
          {"macro_seizure_recall", s.macro_seizure_recall},
          {"macro_non_seizure_rate", s.macro_non_seizure_rate},
          {"micro", to_json(s.micro)}};
}

json to_json(const ExperimentResult& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"patient", f.patient},
                     {"specificity_only", f.specificity_only},
                     {"n_train", f.n_train},
                     {"n_test", f.n_test},
                     {"normalizer_hash", hex64(f.normalizer_hash)},
                     {"metrics", to_json(f.metrics)}});
  }
  return {{"provenance", r.config}, {"folds", folds}, {"summary", to_json(r.summary)}};
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Stride: return "stride";
    case SweepAxis::Ratio: return "ratio";
    case SweepAxis::Motion: return "motion";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (auto a : {SweepAxis::Stride, SweepAxis::Ratio, SweepAxis::Motion}) {
    if (to_string(a) == name) return a;
  }
  throw_parameter("sweep axis must be stride, ratio or motion, got '" + std::string(name) + "'");
}

namespace {

SweepRow row_of(std::string value, const ExperimentResult& r) {
  return {std::move(value), r.summary.macro_accuracy, r.summary.macro_f1, r.summary.macro_seizure_recall};
}

}  // namespace

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, SweepAxis axis) {
  std::vector<SweepRow> rows;
  if (axis == SweepAxis::Motion) {
    for (bool on : {true, false}) {
      auto c = cfg;
      c.pipeline.motion_removal = on;
      rows.push_back(row_of(on ? "on" : "off", run_experiment(c)));
    }
    return rows;
  }
  const auto corpus = prepare_corpus(cfg);
  if (axis == SweepAxis::Stride) {
    for (int stride = 1; stride <= 9; ++stride) {
      auto c = cfg;
      c.stride_s = stride;
      rows.push_back(row_of(std::to_string(stride), evaluate_lopo(corpus_features(corpus, stride), c, &corpus)));
    }
  } else {
    const auto table = corpus_features(corpus, cfg.stride_s);
    for (int k = 1; k <= 3; ++k) {
      auto c = cfg;
      c.ratio = k;
      rows.push_back(row_of(ratio_string(BalanceSpec{k, 0}), evaluate_lopo(table, c, &corpus)));
    }
  }
  return rows;
}

std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << to_string(axis) << ",accuracy,f1,seizure_recall\n";
  for (const auto& r : rows) {
    out << r.value << ',' << shortest(r.accuracy) << ',' << shortest(r.f1) << ','
        << shortest(r.seizure_recall) << '\n';
  }
  return out.str();
}

models::StoredModel train_model(const FeatureTable& table, const ExperimentConfig& cfg_in) {
  const auto cfg = resolve_seeds(cfg_in);
  if (table.size() == 0) throw_degenerate("train: feature table is empty");
  const auto norm = fit_normalizer(table.X, cfg.normalization, "training table");
  const auto keep = balance_indices(table.labels, BalanceSpec{cfg.ratio, derive_seed(cfg.seed, kTrainBalanceStream)});
  const auto balanced = table.rows(keep);
  models::StoredModel out;
  out.model = fit_feature_model(apply_normalizer(norm, balanced.X), balanced.labels, cfg);
  out.normalizer = norm;
  out.provenance = provenance(cfg_in);
  out.provenance["n_train"] = balanced.size();
  return out;
}

std::vector<EpochLabel> predict(const models::StoredModel& model, const Eigen::MatrixXd& X) {
  if (!model.normalizer) return predict_any(model.model, X);
  return predict_any(model.model, apply_normalizer(*model.normalizer, X));
}

std::vector<models::CnnExample> cnn_examples(const Recording& rec, const WindowSpec& spec) {
  for (auto role : kSeparatedRoles) {
    require(rec.has(role), "cnn: separated channel " + std::string(to_string(role)) + " missing");
  }
  const auto spans = epoch_spans(rec, spec);
  const auto win = static_cast<Eigen::Index>(std::llround(spec.window_s * rec.sample_rate));
  std::vector<models::CnnExample> out;
  out.reserve(spans.size());
  for (const auto& s : spans) {
    models::CnnExample e;
    e.input.resize(static_cast<Eigen::Index>(kSeparatedRoles.size()), win);
    for (std::size_t c = 0; c < kSeparatedRoles.size(); ++c) {
      const auto& ch = rec.channel(kSeparatedRoles[c]);
      for (Eigen::Index t = 0; t < win; ++t) {
        e.input(static_cast<Eigen::Index>(c), t) = ch[s.first_sample + static_cast<std::size_t>(t)];
      }
    }
    e.target = models::to_class(s.label);
    out.push_back(std::move(e));
  }
  return out;
}

NormalizationParams fit_channel_scaler(const std::vector<models::CnnExample>& examples) {
  if (examples.empty()) throw_degenerate("cnn: no training windows");
  const auto channels = examples.front().input.rows();
  std::vector<double> mean(static_cast<std::size_t>(channels), 0.0);
  std::vector<double> sq(static_cast<std::size_t>(channels), 0.0);
  double count = 0.0;
  for (const auto& e : examples) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      mean[static_cast<std::size_t>(c)] += e.input.row(c).sum();
      sq[static_cast<std::size_t>(c)] += e.input.row(c).squaredNorm();
    }
    count += static_cast<double>(e.input.cols());
  }
  NormalizationParams p;
  p.kind = NormalizationKind::ZScore;
  p.fitted_on = "cnn input channels";
  for (std::size_t c = 0; c < mean.size(); ++c) {
    const double m = mean[c] / count;
    const double sd = std::sqrt(std::max(0.0, sq[c] / count - m * m));
    p.offset.push_back(m);
    p.scale.push_back(sd);
    p.passthrough.push_back(!(sd > 0));
  }
  return p;
}

void apply_channel_scaler(const NormalizationParams& p, std::vector<models::CnnExample>& examples) {
  for (auto& e : examples) {
    require(static_cast<std::size_t>(e.input.rows()) == p.offset.size(), "cnn: channel count mismatch");
    for (Eigen::Index c = 0; c < e.input.rows(); ++c) {
      const auto i = static_cast<std::size_t>(c);
      if (p.passthrough[i]) continue;
      e.input.row(c) = (e.input.row(c).array() - p.offset[i]) / p.scale[i];
    }
  }
}

models::StoredModel train_cnn_model(const std::vector<Recording>& separated, const ExperimentConfig& cfg_in,
                                    models::TrainReport* report) {
  const auto cfg = resolve_seeds(cfg_in);
  WindowSpec spec;
  spec.stride_s = cfg.stride_s;
  std::vector<models::CnnExample> all;
  for (const auto& rec : separated) {
    auto ex = cnn_examples(rec, spec);
    all.insert(all.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
  }
  const auto scaler = fit_channel_scaler(all);
  apply_channel_scaler(scaler, all);
  auto res = models::cnn_train(all, cfg.cnn_arch, cfg.cnn_train);
  if (report) *report = res.report;
  models::StoredModel out;
  out.model = std::move(res.model);
  out.normalizer = scaler;
  out.provenance = provenance(cfg_in);
  out.provenance["n_train"] = res.report.n_train;
  out.provenance["n_val"] = res.report.n_val;
  out.provenance["n_test"] = res.report.n_test;
  return out;
}

std::vector<EpochLabel> predict_cnn(const models::StoredModel& model, std::vector<models::CnnExample> examples) {
  const auto* cnn = std::get_if<models::Cnn1d>(&model.model);
  require(cnn != nullptr, "predict_cnn: model is not a cnn");
  if (model.normalizer) apply_channel_scaler(*model.normalizer, examples);
  std::vector<EpochLabel> out;
  for (const auto& e : examples) out.push_back(models::from_class(models::cnn_predict(*cnn, e.input)));
  return out;
}

}  // namespace earpipe
