// earpipe: command-line front end for the seizure-detection pipeline.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "earpipe/error.hpp"
#include "earpipe/experiment.hpp"
#include "earpipe/snr.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace earpipe;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw_parse("config " + path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  out << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::pair<double, double> parse_pair(const std::string& text, const char* what) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument("no comma");
    const double lo = std::stod(text.substr(0, comma));
    const double hi = std::stod(text.substr(comma + 1));
    return {lo, hi};
  } catch (const std::exception&) {
    throw_parameter(std::string(what) + " must be LO,HI, got '" + text + "'");
  }
}

Band parse_band(const std::string& text) {
  if (auto b = find_band(text)) return *b;
  const auto [lo, hi] = parse_pair(text, "--band");
  return Band{BandName::Alpha, "custom", lo, hi};
}

// Options shared by every subcommand: a JSON config that flags override.
struct Common {
  std::string config;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App* sub) {
    sub->add_option("--config", config, "JSON configuration file")->check(CLI::ExistingFile);
    seed_opt = sub->add_option("--seed", seed, "master random seed");
  }

  ExperimentConfig load() const {
    ExperimentConfig cfg;
    if (!config.empty()) cfg = experiment_from_json(read_json_file(config));
    if (seed_opt->count() > 0) cfg.seed = seed;
    return cfg;
  }
};

std::string error_json(std::string_view kind, const std::string& message) {
  return json{{"error", kind}, {"message", message}}.dump() + "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"behind-the-ear seizure detection pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "earpipe 0.1.0");

  // synth
  Common synth_c;
  std::string synth_out;
  int synth_n = 0;
  double synth_dur = 0;
  bool synth_csv = false;
  auto* synth = app.add_subcommand("synth", "generate the synthetic patient corpus");
  synth_c.add(synth);
  synth->add_option("--out", synth_out, "output directory")->required();
  auto* synth_n_opt = synth->add_option("--patients", synth_n, "number of patients");
  auto* synth_dur_opt = synth->add_option("--duration", synth_dur, "seconds per recording");
  synth->add_flag("--csv", synth_csv, "write CSV directories instead of binary files");

  // preprocess
  Common pre_c;
  std::string pre_in, pre_out, pre_band;
  double pre_mains = 60;
  auto* pre = app.add_subcommand("preprocess", "notch, detrend, outlier clip, optional bandpass");
  pre_c.add(pre);
  pre->add_option("--in", pre_in)->required();
  pre->add_option("--out", pre_out)->required();
  auto* pre_mains_opt = pre->add_option("--mains", pre_mains, "mains frequency")->check(CLI::IsMember({50.0, 60.0}));
  auto* pre_band_opt = pre->add_option("--bandpass", pre_band, "LO,HI in Hz");

  // denoise
  Common den_c;
  std::string den_in, den_out, den_report;
  int den_k = 8;
  double den_alpha = 2000, den_thr = 0.3;
  auto* den = app.add_subcommand("denoise", "VMD motion-artifact removal using the IMU");
  den_c.add(den);
  den->add_option("--in", den_in)->required();
  den->add_option("--out", den_out)->required();
  auto* den_k_opt = den->add_option("--k", den_k, "number of modes");
  auto* den_alpha_opt = den->add_option("--alpha", den_alpha, "bandwidth penalty");
  auto* den_thr_opt = den->add_option("--corr-threshold", den_thr, "|r| above which a mode is dropped");
  den->add_option("--report", den_report, "per-mode CSV report");

  // separate
  Common sep_c;
  std::string sep_in, sep_out, sep_method, sep_tpl;
  auto* sep = app.add_subcommand("separate", "split mixed channels into EEG, EMG and EOG");
  sep_c.add(sep);
  sep->add_option("--in", sep_in)->required();
  sep->add_option("--out", sep_out)->required();
  auto* sep_method_opt = sep->add_option("--method", sep_method, "emd or nnmf");
  sep->add_option("--templates", sep_tpl, "template file (nnmf)");

  // train-templates
  Common tt_c;
  std::string tt_eeg, tt_eog, tt_emg, tt_out;
  auto* tt = app.add_subcommand("train-templates", "learn NNMF frequency templates");
  tt_c.add(tt);
  tt->add_option("--eeg", tt_eeg, "recording whose channels are clean EEG");
  tt->add_option("--eog", tt_eog, "recording whose channels are clean EOG");
  tt->add_option("--emg", tt_emg, "recording whose channels are clean EMG");
  tt->add_option("--out", tt_out)->required();

  // features
  Common feat_c;
  std::vector<std::string> feat_in;
  std::string feat_out, feat_ratio;
  int feat_stride = 1;
  auto* feat = app.add_subcommand("features", "segment separated recordings and extract features");
  feat_c.add(feat);
  feat->add_option("--in", feat_in, "separated recordings")->required();
  feat->add_option("--out", feat_out)->required();
  auto* feat_stride_opt = feat->add_option("--stride", feat_stride, "window stride in seconds");
  auto* feat_ratio_opt = feat->add_option("--ratio", feat_ratio, "balance ratio 1:k (omit to keep all windows)");

  // train
  Common train_c;
  std::string train_model_s, train_features, train_out;
  std::vector<std::string> train_in;
  auto* train = app.add_subcommand("train", "train a classifier");
  train_c.add(train);
  auto* train_model_opt = train->add_option("--model", train_model_s, "svm, knn, rfc or cnn");
  train->add_option("--features", train_features, "feature CSV (svm, knn, rfc)");
  train->add_option("--in", train_in, "separated recordings (cnn)");
  train->add_option("--out", train_out)->required();

  // evaluate
  Common eval_c;
  std::string eval_out, eval_features, eval_model;
  auto* eval = app.add_subcommand("evaluate", "leave-one-patient-out evaluation, or score a saved model");
  eval_c.add(eval);
  eval->add_option("--out", eval_out, "metrics JSON (default stdout)");
  eval->add_option("--features", eval_features, "precomputed feature CSV");
  eval->add_option("--model", eval_model, "saved model to score on --features instead of LOPO");

  // sweep
  Common sw_c;
  std::string sw_axis, sw_out;
  auto* sw = app.add_subcommand("sweep", "stride, ratio or motion ablation");
  sw_c.add(sw);
  sw->add_option("--axis", sw_axis, "stride, ratio or motion")->required();
  sw->add_option("--out", sw_out, "CSV table (default stdout)");

  // snr
  Common snr_c;
  std::string snr_raw, snr_recon, snr_channel = "MixedLeft", snr_out;
  std::vector<std::string> snr_bands;
  auto* snr = app.add_subcommand("snr", "band SNR of a recording, or raw vs reconstructed");
  snr_c.add(snr);
  snr->add_option("--raw", snr_raw)->required();
  snr->add_option("--reconstructed", snr_recon);
  snr->add_option("--channel", snr_channel, "channel role");
  snr->add_option("--band", snr_bands, "band name or LO,HI (repeatable)");
  snr->add_option("--out", snr_out, "JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json("usage", e.what());
    return 2;
  }

  try {
    if (*synth) {
      auto cfg = resolve_seeds(synth_c.load());
      if (synth_n_opt->count()) cfg.corpus.n_patients = synth_n;
      if (synth_dur_opt->count()) cfg.corpus.duration_s = synth_dur;
      validate(cfg.corpus);
      fs::create_directories(synth_out);
      json index = json::array();
      for (int i = 0; i < cfg.corpus.n_patients; ++i) {
        const auto rec = synthesize_recording(patient_spec(cfg.corpus, i));
        const auto path = fs::path(synth_out) / (rec.patient_id + (synth_csv ? "" : ".bin"));
        save_recording(rec, path, synth_csv ? PayloadFormat::Csv : PayloadFormat::Binary);
        index.push_back(path.filename().string());
      }
      write_json((fs::path(synth_out) / "corpus.json").string(),
                 {{"provenance", provenance(synth_c.load())}, {"recordings", index}});
    } else if (*pre) {
      auto cfg = pre_c.load();
      auto& p = cfg.pipeline.preprocess;
      if (pre_mains_opt->count()) p.mains_hz = pre_mains;
      if (pre_band_opt->count()) p.bandpass = parse_pair(pre_band, "--bandpass");
      save_recording(preprocess(load_recording(pre_in), p), pre_out);
    } else if (*den) {
      auto cfg = resolve_seeds(den_c.load());
      auto& d = cfg.pipeline.denoise;
      if (den_k_opt->count()) d.vmd.k_modes = den_k;
      if (den_alpha_opt->count()) d.vmd.alpha = den_alpha;
      if (den_thr_opt->count()) d.corr_threshold = den_thr;
      const auto rec = load_recording(den_in);
      std::vector<std::vector<BlockReport>> report;
      save_recording(denoise_recording(rec, d, &report), den_out);
      if (!den_report.empty()) {
        std::ostringstream csv;
        csv << "channel,block,start_s,mode,center_hz,r,excluded\n";
        for (std::size_t c = 0; c < report.size(); ++c) {
          for (const auto& b : report[c]) {
            for (std::size_t m = 0; m < b.center_freqs.size(); ++m) {
              csv << to_string(rec.channels[c].role) << ',' << b.block << ',' << b.start_s << ',' << m << ','
                  << b.center_freqs[m] << ',' << b.r[m] << ',' << (b.excluded[m] ? 1 : 0) << '\n';
            }
          }
        }
        write_text(den_report, csv.str());
      }
    } else if (*sep) {
      auto cfg = sep_c.load();
      if (sep_method_opt->count()) cfg.pipeline.separation = parse_separation(sep_method);
      if (!sep_tpl.empty()) cfg.templates = sep_tpl;
      const auto rec = load_recording(sep_in);
      if (cfg.pipeline.separation == SeparationMethod::Emd) {
        save_recording(separate_emd(rec, cfg.pipeline.emd), sep_out);
      } else {
        require(!cfg.templates.empty(), "separate --method nnmf needs --templates");
        save_recording(separate_nnmf(rec, load_template(cfg.templates)), sep_out);
      }
    } else if (*tt) {
      auto cfg = resolve_seeds(tt_c.load());
      FrequencyTemplate tpl;
      if (tt_eeg.empty() && tt_eog.empty() && tt_emg.empty()) {
        tpl = experiment_templates(cfg);
      } else {
        require(!tt_eeg.empty() && !tt_eog.empty() && !tt_emg.empty(),
                "train-templates needs all of --eeg, --eog and --emg");
        ModalitySources src;
        double fs_rate = 0;
        for (auto [m, path] : {std::pair{Modality::Eeg, tt_eeg}, {Modality::Eog, tt_eog}, {Modality::Emg, tt_emg}}) {
          const auto rec = load_recording(path, {.allow_short_events = true});
          require(fs_rate == 0 || fs_rate == rec.sample_rate, "train-templates: sample rates differ");
          fs_rate = rec.sample_rate;
          for (const auto& ch : rec.channels) src[m].push_back(ch.samples);
        }
        tpl = nnmf_train_templates(src, fs_rate, cfg.stft, cfg.nnmf);
      }
      save_template(tpl, tt_out);
    } else if (*feat) {
      auto cfg = feat_c.load();
      if (feat_stride_opt->count()) cfg.stride_s = feat_stride;
      WindowSpec spec;
      spec.stride_s = cfg.stride_s;
      FeatureTable table;
      for (const auto& path : feat_in) table.append(extract_features(load_recording(path), spec));
      if (feat_ratio_opt->count()) {
        const auto bal = parse_ratio(feat_ratio, derive_seed(cfg.seed, 7));
        table = table.rows(balance_indices(table.labels, bal));
      }
      write_feature_csv(table, feat_out);
    } else if (*train) {
      auto cfg = train_c.load();
      if (train_model_opt->count()) cfg.model = models::parse_model_kind(train_model_s);
      models::StoredModel stored;
      if (cfg.model == models::ModelKind::Cnn) {
        require(!train_in.empty(), "train --model cnn needs --in separated recordings");
        std::vector<Recording> recs;
        for (const auto& p : train_in) recs.push_back(load_recording(p));
        stored = train_cnn_model(recs, cfg);
      } else {
        require(!train_features.empty(), "train needs --features");
        stored = train_model(read_feature_csv(train_features), cfg);
      }
      models::save_model(stored, train_out);
    } else if (*eval) {
      const auto cfg = eval_c.load();
      json out;
      if (!eval_model.empty()) {
        require(!eval_features.empty(), "evaluate --model needs --features");
        const auto table = read_feature_csv(eval_features);
        const auto metrics = compute_metrics(confusion(table.labels, predict(models::load_model(eval_model), table.X)));
        out = {{"provenance", provenance(cfg)}, {"metrics", to_json(metrics)}};
      } else if (!eval_features.empty()) {
        out = to_json(evaluate_lopo(read_feature_csv(eval_features), cfg));
      } else {
        out = to_json(run_experiment(cfg));
      }
      write_json(eval_out, out);
    } else if (*sw) {
      const auto cfg = sw_c.load();
      const auto axis = parse_sweep_axis(sw_axis);
      write_text(sw_out, sweep_csv(axis, sweep(cfg, axis)));
    } else if (*snr) {
      const auto cfg = snr_c.load();
      const auto role = parse_role(snr_channel);
      require(role.has_value(), "unknown channel role '" + snr_channel + "'");
      std::vector<Band> bands;
      for (const auto& b : snr_bands) bands.push_back(parse_band(b));
      if (bands.empty()) bands.push_back(band(BandName::Alpha));
      const auto raw = load_recording(snr_raw, {.allow_short_events = true});
      json out;
      if (!snr_recon.empty()) {
        const auto rec = load_recording(snr_recon, {.allow_short_events = true});
        const auto cmp = compare_snr(raw.channel(*role), rec.channel(*role), raw.sample_rate, bands);
        out = to_json(cmp);
      } else {
        out = json::array();
        for (const auto& b : bands) {
          out.push_back(to_json(snr_report(raw.channel(*role), raw.sample_rate, b.lo_hz,
                                           b.hi_clamped(raw.sample_rate))));
        }
      }
      write_json(snr_out, {{"provenance", provenance(cfg)}, {"channel", snr_channel}, {"snr", out}});
    }
  } catch (const Error& e) {
    std::cerr << error_json(to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::cerr << error_json("internal", e.what());
    return 1;
  }
  return 0;
}
