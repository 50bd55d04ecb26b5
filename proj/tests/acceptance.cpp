// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "blobs.hpp"
#include "earpipe/emd.hpp"
#include "earpipe/experiment.hpp"
#include "earpipe/features.hpp"
#include "earpipe/models/cnn.hpp"
#include "earpipe/models/focal_loss.hpp"
#include "earpipe/nnmf.hpp"
#include "earpipe/preprocess.hpp"
#include "earpipe/snr.hpp"
#include "earpipe/spectral.hpp"
#include "earpipe/stft.hpp"
#include "earpipe/synth.hpp"
#include "earpipe/vmd.hpp"

using namespace earpipe;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

constexpr double kFs = 250.0;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

// Runs a criterion; an exception counts as a failure.
void criterion(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [pass, detail] = body();
    report(id, name, pass, detail);
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Eigen::MatrixXd positive(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Signal sines(std::initializer_list<std::pair<double, double>> freq_amp, std::size_t n, double phase = 0.0) {
  Signal x(n, 0.0);
  for (auto [f, a] : freq_amp) {
    for (std::size_t i = 0; i < n; ++i) x[i] += a * std::sin(2 * pi * f * static_cast<double>(i) / kFs + phase);
  }
  return x;
}

double peak_hz(const Signal& x) {
  double best_f = 0, best = -1;
  for (double f = 0.5; f <= 60.0; f += 0.05) {
    std::complex<double> acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * std::polar(1.0, -2 * pi * f * static_cast<double>(i) / kFs);
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      best_f = f;
    }
  }
  return best_f;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Shared by criteria 8, 12 and 13.
struct EndToEnd {
  ExperimentConfig cfg;
  PreparedCorpus motion_on;
  FeatureTable stride1;
  ExperimentResult on;
  double seconds = 0;
};

}  // namespace

int main() {
  criterion(1, "NNMF IS monotone", [] {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    double worst = -1e300;
    for (int trial = 0; trial < 50; ++trial) {
      const auto V = positive(rng, 64, 128);
      NnmfConfig cfg;
      cfg.beta = 0;
      cfg.max_iter = 100;
      cfg.tol = 0;
      cfg.rng_seed = static_cast<std::uint64_t>(trial);
      const auto fit = nnmf_fit(V, 8, cfg);
      for (std::size_t i = 1; i < fit.divergence.size(); ++i) {
        worst = std::max(worst, (fit.divergence[i] - fit.divergence[i - 1]) / fit.divergence[i - 1]);
      }
    }
    const double s = seconds_since(t0);
    return std::pair{worst < 1e-9 && s < 30, fmt("max relative step %.3e (< 1e-9), %.1f s (< 30 s)", worst, s)};
  });

  criterion(2, "NNMF fixed point and scaling", [] {
    std::mt19937_64 rng(202);
    const auto W = positive(rng, 40, 4), H0 = positive(rng, 4, 30);
    const Eigen::MatrixXd V = W * H0;
    double move = 0;
    for (double beta : {0.0, 1.0, 2.0}) {
      Eigen::MatrixXd H = H0;
      update_activations(V, W, H, beta, 1e-12);
      move = std::max(move, (H - H0).cwiseAbs().maxCoeff());
    }
    const auto X = positive(rng, 30, 20), Y = positive(rng, 30, 20);
    const double d0 = beta_divergence(X, Y, 0), d1 = beta_divergence(X, Y, 1), d2 = beta_divergence(X, Y, 2);
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
      const double lambda = std::pow(10.0, -2.0 + 4.0 * (i + 0.5) / 20.0);
      const Eigen::MatrixXd lx = lambda * X, ly = lambda * Y;
      worst = std::max(worst, std::abs(beta_divergence(lx, ly, 0) - d0) / d0);
      worst = std::max(worst, std::abs(beta_divergence(lx, ly, 1) - lambda * d1) / (lambda * d1));
      worst = std::max(worst, std::abs(beta_divergence(lx, ly, 2) - lambda * lambda * d2) / (lambda * lambda * d2));
    }
    return std::pair{move < 1e-10 && worst < 1e-9,
                     fmt("H moved %.2e (< 1e-10), worst scaling error %.2e (< 1e-9)", move, worst)};
  });

  criterion(3, "EMD reconstruction and ordering", [] {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> f(0.5, 40), a(0.1, 2), ph(0, 2 * pi);
    double worst = 0;
    for (int trial = 0; trial < 10; ++trial) {
      Signal x(2500, 0.0);
      for (int c = 0; c < 5; ++c) {
        const double fc = f(rng), ac = a(rng), pc = ph(rng);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += ac * std::sin(2 * pi * fc * static_cast<double>(i) / kFs + pc);
      }
      worst = std::max(worst, dsp::relative_l2_error(x, emd_decompose(x).reconstruct()));
    }
    const auto two = sines({{25, 1}, {5, 3}}, 2500);
    const auto imfs = emd_decompose(two);
    const double p1 = imfs.imfs.size() > 0 ? peak_hz(imfs.imfs[0]) : 0;
    const double p2 = imfs.imfs.size() > 1 ? peak_hz(imfs.imfs[1]) : 0;
    const double s = seconds_since(t0);
    const bool ok = worst <= 1e-8 && std::abs(p1 - 25) <= 1 && std::abs(p2 - 5) <= 1 && s < 5;
    return std::pair{ok, fmt("reconstruction %.2e (<= 1e-8), IMF1 %.2f Hz, IMF2 %.2f Hz (within 1 Hz), %.2f s (< 5 s)", worst, p1, p2, s)};
  });

  criterion(4, "VMD tone recovery", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto x3 = sines({{2, 1}, {10, 1}, {40, 1}}, 2500);
    const auto r3 = vmd_decompose(x3, kFs, {.k_modes = 3});
    double off = 0;
    const double want[3] = {2, 10, 40};
    for (std::size_t k = 0; k < 3; ++k) off = std::max(off, std::abs(r3.center_freqs[k] - want[k]));
    const auto x1 = sines({{10, 1}}, 5000);
    const auto r1 = vmd_decompose(x1, kFs, {.k_modes = 1});
    const double err = dsp::relative_l2_error(x1, r1.modes[0]);
    const double s = seconds_since(t0);
    return std::pair{off <= 0.5 && err < 0.05 && s < 20,
                     fmt("centres {%.2f, %.2f, %.2f} Hz (worst offset %.3f <= 0.5), 20 s tone error %.4f (< 0.05), %.2f s (< 20 s)",
                         r3.center_freqs[0], r3.center_freqs[1], r3.center_freqs[2], off, err, s)};
  });

  criterion(5, "motion removal SNR gain", [] {
    SynthesisSpec spec;
    spec.duration_s = 30;
    spec.roles = {ChannelRole::MixedLeft};
    spec.rng_seed = 505;
    SynthComponent alpha{.kind = ComponentKind::Tone, .amplitude_mv = 0.05, .freq_hz = 10, .source = Source::Eeg};
    SynthComponent motion{.kind = ComponentKind::MotionBurst, .amplitude_mv = 0.8, .start_s = 10, .stop_s = 20};
    spec.components = {alpha, motion};
    const auto rec = synthesize_recording(spec);
    const auto& x = rec.channels[0].samples;
    const auto out = denoise_channel(x, kFs, rec.imu);
    const double before = snr_db(x, kFs, 8, 12);
    const double after = snr_db(out.signal, kFs, 8, 12);
    const double baseline = snr_db(bandpass(x, kFs, 1, 30), kFs, 8, 12);
    return std::pair{after - before >= 6 && after > baseline,
                     fmt("gain %.2f dB (>= 6), reconstructed %.2f dB vs [1,30] bandpass %.2f dB", after - before, after, baseline)};
  });

  criterion(6, "STFT round trip", [] {
    std::mt19937_64 rng(606);
    std::normal_distribution<double> g(0, 1);
    Signal x(5000);
    for (auto& v : x) v = g(rng);
    const auto y = istft(stft(x, kFs));
    const auto inner = [](const Signal& s) { return std::span(s).subspan(256, s.size() - 512); };
    const double err = dsp::relative_l2_error(inner(x), inner(y));
    return std::pair{err < 1e-9, fmt("interior relative error %.2e (< 1e-9)", err)};
  });

  criterion(7, "feature contract", [] {
    bool counts = true;
    for (int stride = 1; stride <= 9; ++stride) {
      for (double dur : {10.0, 47.0, 300.0}) {
        const auto n = static_cast<std::size_t>(dur * kFs);
        counts &= window_count(n, kFs, {10.0, stride}) == static_cast<std::size_t>(std::floor((dur - 10) / stride)) + 1;
      }
    }
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(0, 300);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<SeizureAnnotation> ann;
      for (int i = 0; i < trial % 4; ++i) {
        const double on = u(rng);
        ann.push_back({on, on + 10 + u(rng) / 6, "s"});
      }
      const double start = std::floor(u(rng));
      bool inside = false;
      for (const auto& a : ann) inside |= a.onset <= start && start + 10 <= a.offset;
      mismatches += (label_window(start, start + 10, ann) == EpochLabel::Seizure) != inside;
    }
    const bool ok = kFeatureCount == 348 && feature_names().size() == 348 && counts && mismatches == 0;
    return std::pair{ok, fmt("%zu features, window counts %s, %d/1000 label mismatches", kFeatureCount,
                             counts ? "match" : "differ", mismatches)};
  });

  // The synthetic corpus is prepared once and shared by 8, 12 and 13.
  EndToEnd e2e;
  std::string e2e_error;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    e2e.motion_on = prepare_corpus(e2e.cfg);
    e2e.stride1 = corpus_features(e2e.motion_on, 1);
    e2e.on = evaluate_lopo(e2e.stride1, e2e.cfg, &e2e.motion_on);
    e2e.seconds = seconds_since(t0);
  } catch (const std::exception& e) {
    e2e_error = e.what();
  }

  criterion(8, "leakage guard", [&] {
    if (!e2e_error.empty()) throw std::runtime_error(e2e_error);
    const auto plan = lopo_plan(e2e.stride1.patient_ids);
    int changed = 0;
    for (const auto& fold : plan.folds) {
      const auto before = params_hash(fold_normalizer(e2e.stride1, fold, e2e.cfg.normalization));
      auto perturbed = e2e.stride1;
      for (auto r : rows_of(perturbed, {fold.test_patient})) perturbed.X.row(static_cast<Eigen::Index>(r)).array() += 1000.0;
      changed += params_hash(fold_normalizer(perturbed, fold, e2e.cfg.normalization)) != before;
    }
    bool reported = true;
    for (std::size_t i = 0; i < e2e.on.folds.size(); ++i) {
      reported &= e2e.on.folds[i].normalizer_hash ==
                  params_hash(fold_normalizer(e2e.stride1, plan.folds[i], e2e.cfg.normalization));
    }
    return std::pair{changed == 0 && reported,
                     fmt("%d of %zu folds changed under test-set perturbation; run hashes %s", changed, plan.folds.size(),
                         reported ? "match" : "differ")};
  });

  criterion(9, "classifier sanity", [] {
    const auto sep = blobs::separable(909, 200, 5);
    const auto train = blobs::margin2(910, 400, 3);
    const auto test = blobs::margin2(911, 400, 3);
    const auto svm = models::svm_train(sep.X, sep.y);
    const auto knn = models::knn_train(sep.X, sep.y, 5);
    const auto rfc = models::rfc_train(sep.X, sep.y);
    const double tr_min = std::min({blobs::accuracy(sep.y, svm.predict(sep.X)), blobs::accuracy(sep.y, knn.predict(sep.X)),
                                    blobs::accuracy(sep.y, rfc.predict(sep.X))});
    const auto svm2 = models::svm_train(train.X, train.y);
    const auto knn2 = models::knn_train(train.X, train.y, 5);
    const auto rfc2 = models::rfc_train(train.X, train.y);
    const double te_min = std::min({blobs::accuracy(test.y, svm2.predict(test.X)), blobs::accuracy(test.y, knn2.predict(test.X)),
                                    blobs::accuracy(test.y, rfc2.predict(test.X))});
    int disagreements = 0;
    for (Eigen::Index q = 0; q < 100; ++q) {
      const Eigen::RowVectorXd row = test.X.row(q);
      std::vector<std::pair<double, Eigen::Index>> d;
      for (Eigen::Index i = 0; i < train.X.rows(); ++i) d.push_back({(train.X.row(i) - row).squaredNorm(), i});
      std::sort(d.begin(), d.end());
      int votes = 0;
      for (int i = 0; i < 5; ++i) votes += train.y[static_cast<std::size_t>(d[static_cast<std::size_t>(i)].second)] == EpochLabel::Seizure;
      const auto knn_want = votes >= 3 ? EpochLabel::Seizure : EpochLabel::NonSeizure;
      int ones = 0;
      for (const auto& t : rfc2.trees) {
        int node = 0;
        while (!t.nodes[static_cast<std::size_t>(node)].is_leaf()) {
          const auto& n = t.nodes[static_cast<std::size_t>(node)];
          node = row(n.feature) <= n.threshold ? n.left : n.right;
        }
        ones += t.nodes[static_cast<std::size_t>(node)].label;
      }
      const auto rfc_want = 2 * ones > static_cast<int>(rfc2.trees.size()) ? EpochLabel::Seizure : EpochLabel::NonSeizure;
      const std::span<const double> xs(row.data(), static_cast<std::size_t>(row.size()));
      disagreements += (knn2.predict(xs) != knn_want) + (rfc2.predict(xs) != rfc_want);
    }
    return std::pair{tr_min == 1.0 && te_min >= 0.95 && disagreements == 0,
                     fmt("min training accuracy %.3f (= 1), min held-out %.3f (>= 0.95), %d oracle disagreements", tr_min, te_min,
                         disagreements)};
  });

  criterion(10, "CNN correctness", [] {
    models::CnnArch tiny;
    tiny.in_channels = 2;
    tiny.in_length = 64;
    tiny.filters = {2, 2, 2};
    tiny.hidden = {4, 4, 4};
    auto net = models::cnn_init(tiny, 1010);
    std::mt19937_64 rng(1011);
    std::normal_distribution<double> g(0, 1);
    for (std::size_t t = 1; t < net.params.size(); t += 2) {
      for (Eigen::Index i = 0; i < net.params[t].size(); ++i) net.params[t].data()[i] = 0.1 * g(rng);
    }
    Eigen::MatrixXd x(2, 64);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    models::FocalLossCfg loss;
    loss.alpha = {0.4, 0.6};
    auto grads = models::zero_gradients(net);
    models::cnn_backward(net, x, 1, loss, false, nullptr, grads);
    double worst = 0;
    const double h = 1e-4;
    for (std::size_t t = 0; t < net.params.size(); ++t) {
      for (Eigen::Index i = 0; i < net.params[t].size(); ++i) {
        auto probe = net;
        probe.params[t].data()[i] += h;
        const double up = models::focal_loss(models::cnn_forward(probe, x, false), 1, loss).loss;
        probe.params[t].data()[i] -= 2 * h;
        const double down = models::focal_loss(models::cnn_forward(probe, x, false), 1, loss).loss;
        const double numeric = (up - down) / (2 * h), analytic = grads[t].data()[i];
        worst = std::max(worst, std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-6}));
      }
    }
    const auto full = models::cnn_init(models::CnnArch{}, 1012);
    Eigen::MatrixXd big(6, 2500);
    for (Eigen::Index i = 0; i < big.size(); ++i) big.data()[i] = g(rng);
    const auto p = models::cnn_forward(full, big, false);
    const double sum_err = std::abs(p[0] + p[1] - 1.0);
    const auto chain = models::length_chain(models::CnnArch{});
    const bool chain_ok = chain == std::array<int, 4>{2500, 1250, 625, 312};
    const double f0 = models::focal_loss_value(0.5, 1.0, 0.0), f2 = models::focal_loss_value(0.5, 1.0, 2.0);
    const bool focal_ok = std::abs(f0 - std::log(2.0)) < 1e-12 && std::abs(f2 - 0.25 * std::log(2.0)) < 1e-12;
    return std::pair{worst < 1e-4 && sum_err < 1e-9 && chain_ok && focal_ok,
                     fmt("gradient error %.2e (< 1e-4), softmax sum error %.1e, chain %d-%d-%d-%d, focal %.5f / %.5f", worst, sum_err,
                         chain[0], chain[1], chain[2], chain[3], f0, f2)};
  });

  criterion(11, "SNR oracle", [] {
    std::mt19937_64 rng(1111);
    std::normal_distribution<double> g(0, 1);
    Signal noise(250 * 60);
    for (auto& v : noise) v = g(rng);
    const double white = snr_db(noise, kFs, 8, 12);
    const auto in_tone = sines({{10, 1}}, 250 * 60), out_tone = sines({{60, 1}}, 250 * 60);
    Signal a(noise.size()), b(noise.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = in_tone[i] + 1e-3 * noise[i];
      b[i] = out_tone[i] + 1e-3 * noise[i];
    }
    const double in_db = snr_db(a, kFs, 8, 12), out_db = snr_db(b, kFs, 8, 12);
    return std::pair{std::abs(white) <= 0.5 && in_db >= 30 && out_db <= -20,
                     fmt("white %.2f dB (0 +- 0.5), in-band tone %.1f dB (>= 30), out-of-band tone %.1f dB (<= -20)", white, in_db, out_db)};
  });

  criterion(12, "end-to-end LOPO", [&] {
    if (!e2e_error.empty()) throw std::runtime_error(e2e_error);
    const auto& s = e2e.on.summary;
    return std::pair{s.macro_accuracy >= 0.90 && s.macro_seizure_recall >= 0.85 && e2e.seconds < 600,
                     fmt("accuracy %.4f (>= 0.90), seizure recall %.4f (>= 0.85), %zu folds, %.0f s (< 600 s)", s.macro_accuracy,
                         s.macro_seizure_recall, e2e.on.folds.size(), e2e.seconds)};
  });

  criterion(13, "ablation direction", [&] {
    if (!e2e_error.empty()) throw std::runtime_error(e2e_error);
    auto off_cfg = e2e.cfg;
    off_cfg.pipeline.motion_removal = false;
    const auto off_corpus = prepare_corpus(off_cfg);
    const auto off = evaluate_lopo(corpus_features(off_corpus, 1), off_cfg, &off_corpus);
    auto stride9_cfg = e2e.cfg;
    stride9_cfg.stride_s = 9;
    const auto s9 = evaluate_lopo(corpus_features(e2e.motion_on, 9), stride9_cfg, &e2e.motion_on);
    const double on = e2e.on.summary.macro_accuracy;
    return std::pair{on >= off.summary.macro_accuracy && on >= s9.summary.macro_accuracy,
                     fmt("motion on %.4f vs off %.4f; stride 1 %.4f vs stride 9 %.4f", on, off.summary.macro_accuracy, on,
                         s9.summary.macro_accuracy)};
  });

  criterion(14, "CLI determinism", [] {
    const auto dir = fs::temp_directory_path() / "earpipe_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "config.json") << R"({"corpus": {"n_patients": 3, "duration_s": 120}, "stride_s": 2})";
    std::string outputs[2];
    for (int run = 0; run < 2; ++run) {
      const auto out = dir / ("metrics" + std::to_string(run) + ".json");
      const std::string cmd = std::string("\"") + EARPIPE_CLI + "\" evaluate --config \"" + (dir / "config.json").string() +
                              "\" --seed 14 --out \"" + out.string() + "\"";
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw std::runtime_error("earpipe evaluate failed");
      outputs[run] = slurp(out);
    }
    return std::pair{!outputs[0].empty() && outputs[0] == outputs[1],
                     fmt("%zu and %zu bytes, %s", outputs[0].size(), outputs[1].size(),
                         outputs[0] == outputs[1] ? "identical" : "different")};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
