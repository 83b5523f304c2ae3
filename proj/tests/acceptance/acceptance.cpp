// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Pass criterion numbers as arguments to run a
// subset, e.g. `acceptance 1 2 13`.

#include <chrono>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "cuesep/experiments.hpp"
#include "gradcheck.hpp"

using namespace cuesep;
using testing::check_gradients;
using testing::random_tensor;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records a failed sub-check; the first few failures make it into the line.
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail.clear();
    pass = false;
    if (detail.size() < 200) detail += (detail.empty() ? "" : "; ") + what;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> randn(int n, std::mt19937_64& rng) { return random_tensor({n}, rng).storage(); }

// ------------------------------------------------------------------ oracles

double si_snr_direct(const std::vector<double>& est, const std::vector<double>& ref) {
  long double dot = 0, rr = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    dot += static_cast<long double>(est[i]) * ref[i];
    rr += static_cast<long double>(ref[i]) * ref[i];
  }
  long double s2 = 0, e2 = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const long double s = dot / rr * ref[i];
    s2 += s * s;
    e2 += (est[i] - s) * (est[i] - s);
  }
  return static_cast<double>(10.0L * std::log10(std::clamp(s2 / e2, 1e-10L, 1e10L)));
}

// Mean |STFT| difference by direct DFT summation in long double.
double stft_direct(const std::vector<double>& est, const std::vector<double>& ref, int win, int hop) {
  const int n = static_cast<int>(ref.size()), pad = win / 2, bins = win / 2 + 1;
  const long double pi = std::numbers::pi_v<long double>;
  std::vector<std::complex<long double>> tw(win);
  std::vector<long double> hann(win);
  for (int j = 0; j < win; ++j) {
    tw[j] = std::polar(1.0L, -2.0L * pi * j / win);
    hann[j] = 0.5L - 0.5L * std::cos(2.0L * pi * j / win);
  }
  auto at = [&](const std::vector<double>& x, int i) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return static_cast<long double>(x[i]);
  };
  long double total = 0;
  const int frames = n / hop + 1;
  for (int f = 0; f < frames; ++f)
    for (int k = 0; k < bins; ++k) {
      std::complex<long double> ae = 0, ar = 0;
      for (int j = 0; j < win; ++j) {
        const auto w = tw[(static_cast<long long>(j) * k) % win] * hann[j];
        ae += w * at(est, f * hop + j - pad);
        ar += w * at(ref, f * hop + j - pad);
      }
      total += std::abs(std::abs(ae) - std::abs(ar));
    }
  return static_cast<double>(total / (static_cast<long double>(frames) * bins));
}

// ---------------------------------------------------------------- criteria

Outcome shape_pipeline() {
  Outcome o;
  // Standard geometry (N=256, K=64, 40/20 encoder, fast visual stack) with a
  // narrow learner and one backend block so the timing measures the pipeline
  // rather than the width of the networks.
  ModelConfig cfg = preset_config("fast");
  cfg.width = 16;
  cfg.lstm_hidden = 16;
  cfg.num_blocks = 1;
  auto [target, video] = synth_av_pair(1, 2.0, 0);
  const Waveform mix = mix_at_snr(target, synth_av_pair(2, 2.0, 3).first, 0.0);
  CueSepModel model(cfg, 1);
  Graph warm(false);
  model.forward(warm, mix, video);
  const auto t0 = std::chrono::steady_clock::now();
  Graph g(false);
  ForwardOutput out = model.forward(g, mix, video);
  const double secs = seconds_since(t0);
  o.expect(mix.length() == 32000, "L");
  o.expect(out.raw_frames == 1599, "raw frames " + std::to_string(out.raw_frames));
  o.expect(out.padded_frames == 1632, "padded frames " + std::to_string(out.padded_frames));
  o.expect(out.num_chunks == 50, "T_v " + std::to_string(out.num_chunks));
  o.expect(out.psi.shape() == Shape{3, cfg.width, 50}, "psi " + shape_str(out.psi.shape()));
  o.expect(out.mask.shape() == Shape{256, 64, 50}, "mask " + shape_str(out.mask.shape()));
  o.expect(out.estimate.dim(0) == 32000, "estimate length");
  o.expect(secs < 1.0, fmt("forward took %.3f s", secs));
  if (o.pass)
    o.detail = "raw 1599, padded 1632, T_v 50, psi 3x" + std::to_string(cfg.width) +
               "x50, mask 256x64x50, forward " + fmt("%.3f s", secs);
  return o;
}

Outcome si_snr_oracle() {
  Outcome o;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(16, 2000);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = len(rng);
    auto ref = randn(n, rng), est = randn(n, rng);
    worst = std::max(worst, std::abs(si_snr(est, ref) - si_snr_direct(est, ref)));
  }
  o.expect(worst < 1e-9, fmt("oracle max err %.3g dB", worst));
  double scale_err = 0.0;
  for (int i = 0; i < 20; ++i) {
    auto ref = randn(500, rng), est = randn(500, rng);
    for (std::size_t k = 0; k < est.size(); ++k) est[k] += ref[k];
    const double base = si_snr(est, ref);
    for (double a : {0.1, 2.0, 100.0}) {
      auto s = est;
      for (auto& v : s) v *= a;
      scale_err = std::max(scale_err, std::abs(si_snr(s, ref) - base));
    }
  }
  o.expect(scale_err < 1e-6, fmt("scale err %.3g dB", scale_err));
  const double hand = si_snr(std::vector<double>{1, 0}, std::vector<double>{1, 1});
  o.expect(hand == 0.0, fmt("hand case %.3g dB", hand));
  if (o.pass) o.detail = fmt("oracle max err %.2g dB, scale max err %.2g dB, hand case 0 dB", worst, scale_err);
  return o;
}

Outcome si_snri_identity() {
  Outcome o;
  const auto data = synth_corpus(CorpusSpec{100, 16, 0.5, -5.0, 5.0, 31});
  double worst = 0.0;
  for (const auto& s : data)
    worst = std::max(worst, std::abs(si_snri(s.mixture.samples, s.mixture.samples, s.target.samples)));
  o.expect(worst < 1e-9, fmt("max |SI-SNRi| %.3g", worst));
  if (o.pass) o.detail = fmt("max |SI-SNRi(mix, mix)| = %.2g dB over 100 mixtures", worst);
  return o;
}

Outcome stft_loss() {
  Outcome o;
  std::mt19937_64 rng(4);
  auto ref = randn(32000, rng);
  auto neg = ref;
  for (auto& v : neg) v = -v;
  const double same = stft_mag_loss(ref, ref), flipped = stft_mag_loss(neg, ref);
  o.expect(same == 0.0, fmt("est=ref gives %.3g", same));
  o.expect(flipped < 1e-12, fmt("est=-ref gives %.3g", flipped));
  std::vector<double> sine(32000), zero(32000, 0.0);
  for (int i = 0; i < 32000; ++i) sine[i] = std::sin(2.0 * std::numbers::pi * 440.0 * i / kSampleRate);
  const StftConfig cfg;
  const double got = stft_mag_loss(zero, sine, cfg);
  double expect = 0.0;
  for (auto [win, hop] : cfg.resolutions) expect += stft_direct(zero, sine, win, hop);
  o.expect(got > 0.0, "silence vs sine not positive");
  o.expect(std::abs(got - expect) < 1e-9, fmt("direct %.12g vs %.12g", expect, got));
  if (o.pass)
    o.detail = fmt("0 at est=ref, %.1g at est=-ref, silence vs sine %.9f (direct diff %.2g)", flipped,
                   got, std::abs(got - expect));
  return o;
}

Outcome ce_closed_form() {
  Outcome o;
  Tensor logits({48, 50}, 1.7);
  std::vector<int> tokens(50);
  for (int t = 0; t < 50; ++t) tokens[t] = (t * 7) % 48;
  const double ce = ce_token_loss(logits, tokens);
  o.expect(std::abs(ce - std::log(48.0)) < 1e-6, fmt("CE %.9f", ce));
  o.expect(std::abs(ce - 3.8712) < 1e-4, fmt("CE %.9f vs 3.8712", ce));
  if (o.pass) o.detail = fmt("CE %.9f, ln 48 = %.9f", ce, std::log(48.0));
  return o;
}

Outcome fusion_properties() {
  Outcome o;
  const int h = 16, k = 8, t_v = 50;
  ParamStore store;
  AttentionFusion att(nn::Builder(store, 3), h);
  std::mt19937_64 rng(3);
  Tensor enh = random_tensor({kNumCues, h, k, t_v}, rng);
  Graph g(false);
  Var psi = att.weights(g, g.constant(random_tensor({kNumCues, h, t_v}, rng, 3.0)), {true, true, true});
  double sum_err = 0.0;
  for (int hh = 0; hh < h; ++hh)
    for (int t = 0; t < t_v; ++t) {
      double s = 0.0;
      for (int j = 0; j < kNumCues; ++j) {
        o.expect(psi.value().at(j, hh, t) >= 0.0, "negative psi");
        s += psi.value().at(j, hh, t);
      }
      sum_err = std::max(sum_err, std::abs(s - 1.0));
    }
  o.expect(sum_err < 1e-6, fmt("psi sum err %.3g", sum_err));

  bool onehot_exact = true;
  for (int pick = 0; pick < kNumCues; ++pick) {
    Tensor one({kNumCues, h, t_v});
    for (int hh = 0; hh < h; ++hh)
      for (int t = 0; t < t_v; ++t) one.at(pick, hh, t) = 1.0;
    Var out = fuse(g.constant(one), g.constant(enh));
    for (int hh = 0; hh < h; ++hh)
      for (int kk = 0; kk < k; ++kk)
        for (int t = 0; t < t_v; ++t)
          onehot_exact = onehot_exact && out.value().at(hh, kk, t) == enh.at(pick, hh, kk, t);
  }
  o.expect(onehot_exact, "one-hot psi not bit-identical");

  Var fused = fuse(psi, g.constant(enh));
  double loop_err = 0.0;
  for (int hh = 0; hh < h; ++hh)
    for (int kk = 0; kk < k; ++kk)
      for (int t = 0; t < t_v; ++t) {
        double s = 0.0;
        for (int j = 0; j < kNumCues; ++j) s += psi.value().at(j, hh, t) * enh.at(j, hh, kk, t);
        loop_err = std::max(loop_err, std::abs(s - fused.value().at(hh, kk, t)));
      }
  o.expect(loop_err < 1e-12, fmt("loop err %.3g", loop_err));
  if (o.pass)
    o.detail = fmt("psi sum err %.2g, one-hot bit-identical, loop err %.2g", sum_err, loop_err);
  return o;
}

Outcome gradient_checks() {
  Outcome o;
  const int h = 8, k = 8, t_v = 4;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(7);
  std::vector<std::pair<std::string, double>> worst;

  {
    ParamStore store;
    Interaction inter(nn::Builder(store, 1), h);
    auto r = check_gradients(
        [&](Graph& g, const std::vector<Var>& x) {
          auto [a, v] = inter(g, x[0], x[1]);
          return ops::concat({ops::reshape(a, {h * k * t_v}), ops::reshape(v, {h * t_v})}, 0);
        },
        {random_tensor({h, k, t_v}, rng), random_tensor({h, t_v}, rng)}, &store);
    worst.emplace_back("interact", r.worst());
  }
  {
    ParamStore store;
    CueBranch br(nn::Builder(store, 2), h);
    auto rel = check_gradients(
        [&](Graph& g, const std::vector<Var>& x) { return br.reliability(g, x[0], x[1]); },
        {random_tensor({h, t_v}, rng), random_tensor({h, k, t_v}, rng)}, &store);
    worst.emplace_back("reliability", rel.worst());
    auto enh = check_gradients(
        [&](Graph& g, const std::vector<Var>& x) { return br.enhance(g, x[0], x[1]); },
        {random_tensor({h, t_v}, rng), random_tensor({h, k, t_v}, rng)}, &store);
    worst.emplace_back("enhance", enh.worst());
  }
  {
    ParamStore store;
    AttentionFusion att(nn::Builder(store, 3), h);
    auto r = check_gradients(
        [&](Graph& g, const std::vector<Var>& x) {
          return fuse(att.weights(g, x[0], {true, true, true}), x[1]);
        },
        {random_tensor({kNumCues, h, t_v}, rng), random_tensor({kNumCues, h, k, t_v}, rng)}, &store);
    worst.emplace_back("attention_fuse", r.worst());
  }
  const double secs = seconds_since(t0);
  std::string summary;
  for (const auto& [name, err] : worst) {
    o.expect(err < 1e-4, name + fmt(" rel err %.3g", err));
    summary += (summary.empty() ? "" : ", ") + name + fmt(" %.1e", err);
  }
  o.expect(secs < 60.0, fmt("took %.1f s", secs));
  if (o.pass) o.detail = summary + fmt(" (%.1f s)", secs);
  return o;
}

Outcome residual_identities() {
  Outcome o;
  const int h = 12, k = 6, t_v = 9;
  std::mt19937_64 rng(8);
  Tensor audio = random_tensor({h, k, t_v}, rng), visual = random_tensor({h, t_v}, rng);
  {
    ParamStore store;
    Interaction inter(nn::Builder(store, 1), h);
    inter.zero_outputs();
    Graph g(false);
    auto [a, v] = inter(g, g.constant(audio), g.constant(visual));
    o.expect(a.value().storage() == audio.storage() && v.value().storage() == visual.storage(),
             "interact not identity");
  }
  {
    ParamStore store;
    CueBranch br(nn::Builder(store, 2), h);
    br.zero_enhance_output();
    Graph g(false);
    Var e = br.enhance(g, g.constant(random_tensor({h, t_v}, rng)), g.constant(audio));
    o.expect(e.value().storage() == audio.storage(), "cue_enhance not identity");
  }
  {
    ParamStore store;
    StreamCrossAttention att(nn::Builder(store, 3), h);
    att.zero_outputs();
    Tensor other = random_tensor({h, k, t_v}, rng);
    Graph g(false);
    DualStream s = att(g, {g.constant(audio), g.constant(other)});
    o.expect(s.target.value().storage() == audio.storage() &&
                 s.interference.value().storage() == other.storage(),
             "cross-attention not identity");
  }
  if (o.pass) o.detail = "interact, cue_enhance and backend cross-attention are exact identities";
  return o;
}

Outcome degradation_protocol() {
  Outcome o;
  const FrameMask m = sample_mask_blocks(50, 0.5, 5, 17);
  o.expect(m.count() == 25, "MF masked " + std::to_string(m.count()));
  // Disjoint blocks of exactly five consecutive frames.
  int runs = 0;
  for (int t = 0; t < 50;) {
    if (!m.flags[t]) { ++t; continue; }
    int len = 0;
    while (t < 50 && m.flags[t]) ++len, ++t;
    runs += len / 5;
    o.expect(len % 5 == 0, "run of " + std::to_string(len));
  }
  o.expect(runs == 5, "blocks " + std::to_string(runs));
  o.expect(m.block_starts.size() == 5, "block list size");

  const auto av = synth_av_pair(5, 2.0, 2);
  const FrameSeq& video = av.second;
  for (auto kind : {DegradationKind::kGaussianBlur, DegradationKind::kConcealment,
                    DegradationKind::kFaceMissing, DegradationKind::kMaskedFeature}) {
    const std::string name = to_string(kind);
    const auto s1 = make_degradation(kind, 50, 0.5, 99), s2 = make_degradation(kind, 50, 0.5, 99);
    o.expect(s1.mask.flags == s2.mask.flags, name + " mask not deterministic");
    const auto s0 = make_degradation(kind, 50, 0.0, 99);
    if (acts_on_features(kind)) {
      std::mt19937_64 rng(1);
      VisualFeat f{random_tensor({8, 50}, rng)};
      o.expect(degrade(f, s1, 99).values.storage() == degrade(f, s2, 99).values.storage(),
               name + " not deterministic");
      o.expect(degrade(f, s0, 99).values.storage() == f.values.storage(), name + " p=0 not a no-op");
    } else {
      o.expect(degrade(video, s1, 99).frames.storage() == degrade(video, s2, 99).frames.storage(),
               name + " not deterministic");
      o.expect(degrade(video, s0, 99).frames.storage() == video.frames.storage(),
               name + " p=0 not a no-op");
    }
  }
  if (o.pass) o.detail = "MF p=0.5 masks 25 frames in 5 blocks of 5; deterministic; p=0 bitwise no-op";
  return o;
}

Outcome tokenizer_oracles() {
  Outcome o;
  Tensor pts({10, 1});
  for (int i = 0; i < 10; ++i) pts.at(i, 0) = i < 5 ? 0.0 : 10.0;
  Codebook two = fit_kmeans(pts, 2, 3);
  std::vector<double> c{two.centroids.at(0, 0), two.centroids.at(1, 0)};
  std::sort(c.begin(), c.end());
  o.expect(c[0] == 0.0 && c[1] == 10.0, fmt("centroids %.17g %.17g", c[0], c[1]));

  std::mt19937_64 rng(9);
  Tensor cloud = random_tensor({400, 6}, rng);
  Codebook cb = fit_kmeans(cloud, 16, 4);
  for (std::size_t i = 1; i < cb.inertia_trace.size(); ++i)
    o.expect(cb.inertia_trace[i] <= cb.inertia_trace[i - 1] * (1.0 + 1e-12), "inertia increased");

  FrameFeatures f{random_tensor({6, 200}, rng), FeatureKind::kAcoustic};
  const auto tok = tokenize(f, cb);
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int k = 0; k < cb.clusters(); ++k) {
      double d = 0.0;
      for (int i = 0; i < 6; ++i) d += std::pow(f.values.at(i, t) - cb.centroids.at(k, i), 2);
      if (d < bd) bd = d, best = k;
    }
    mismatches += tok[t] != best;
  }
  o.expect(mismatches == 0, std::to_string(mismatches) + " tokenize mismatches");

  Waveform sine;
  sine.samples.resize(32000);
  for (int i = 0; i < 32000; ++i) sine.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * 200.0 * i / kSampleRate);
  const FrameFeatures ac = acoustic_features(sine);
  double pitch_err = 0.0;
  // Interior frames: the analysis window lies entirely inside the clip.
  for (int t = 1; t + 1 < ac.num_frames(); ++t)
    pitch_err = std::max(pitch_err, std::abs(ac.values.at(0, t) - 200.0));
  o.expect(pitch_err < 2.0, fmt("pitch err %.3f Hz", pitch_err));
  if (o.pass)
    o.detail = fmt("{0,10} recovered, inertia monotone over %.0f iters, 0 token mismatches, pitch err %.3f Hz",
                   static_cast<double>(cb.inertia_trace.size()), pitch_err);
  return o;
}

Outcome overfit() {
  Outcome o;
  RunConfig cfg;  // toy preset, 8 clips of 2 s
  cfg.steps = 2000;
  const auto t0 = std::chrono::steady_clock::now();
  Trainer trainer(cfg);
  double si = trainer.train_sisnri();
  trainer.train(nullptr, [&](const StepLog& row) {
    if (row.step % 100 != 0) return true;
    si = trainer.train_sisnri();
    std::fprintf(stderr, "  overfit step %d: loss %.3f, train SI-SNRi %.2f dB (%.0f s)\n", row.step,
                 row.total, si, seconds_since(t0));
    return si < 10.0;
  });
  if (trainer.steps_done() % 100 != 0) si = trainer.train_sisnri();
  const double secs = seconds_since(t0);
  o.expect(trainer.dataset().size() == 8, "dataset size");
  o.expect(si >= 10.0, fmt("train SI-SNRi %.2f dB", si));
  o.expect(trainer.steps_done() <= 2000, "too many steps");
  o.expect(secs < 1800.0, fmt("took %.0f s", secs));
  o.detail = fmt("train SI-SNRi %.2f dB after %.0f steps, %.0f s", si,
                 static_cast<double>(trainer.steps_done()), secs) +
             (o.pass ? "" : " | " + o.detail);
  return o;
}

Outcome ablation_surface() {
  Outcome o;
  RunConfig base;
  base.steps = 50;
  const auto heldout = heldout_corpus(base, 2);
  std::size_t all_on = 0, all_off = 0;
  double worst_disabled = 0.0;
  int ran = 0;
  for (const auto& v : ablation_variants()) {
    try {
      const AblationResult r = run_ablation_variant(base, v, heldout);
      ++ran;
      o.expect(std::isfinite(r.final_loss), v.label() + " loss not finite");
      worst_disabled = std::max(worst_disabled, r.disabled_grad_norm);
      if (v.fusion == FusionMode::kInteraction && r.variant.cues == std::array<bool, 3>{1, 1, 1})
        all_on = r.num_params;
      if (!v.cues[0] && !v.cues[1] && !v.cues[2]) all_off = r.num_params;
    } catch (const std::exception& e) {
      o.expect(false, v.label() + ": " + e.what());
    }
  }
  o.expect(worst_disabled == 0.0, fmt("disabled-head grad norm %.3g", worst_disabled));
  o.expect(all_off < all_on, "all-cues-off model not smaller");

  // A head that exists but carries zero loss weight must also see no gradient.
  for (int cue = 0; cue < kNumCues; ++cue) {
    RunConfig cfg = base;
    cfg.num_samples = 1;
    cfg.duration_s = 1.0;
    (cue == kSpeakerCue ? cfg.weights.speaker : cue == kAcousticCue ? cfg.weights.acoustic
                                                                   : cfg.weights.semantic) = 0.0;
    Trainer t(cfg);
    t.step();
    const std::string cls = cue_head_prefixes(cue)[cue == kSemanticCue ? 0 : 1];
    const double norm = grad_norm(t.model().params(), cls);
    o.expect(norm == 0.0, cls + fmt(" grad %.3g with zero weight", norm));
  }
  if (o.pass)
    o.detail = std::to_string(ran) + " variants trained 50 steps; disabled-head grad norm 0; params " +
               std::to_string(all_off) + " (no cues) < " + std::to_string(all_on) + " (all cues)";
  return o;
}

Outcome determinism() {
  Outcome o;
  auto run = [] {
    RunConfig cfg;
    cfg.num_samples = 3;
    cfg.steps = 6;
    cfg.seed = 5;
    cfg.data_seed = 6;
    cfg.deterministic = true;
    Trainer t(cfg);
    std::ostringstream log;
    t.train(&log);
    const ModelExtractor ex(t.model());
    std::ostringstream csv;
    for (const auto& r : sweep_degradations(
             ex, heldout_corpus(cfg, 2),
             {DegradationKind::kGaussianBlur, DegradationKind::kConcealment,
              DegradationKind::kMaskedFeature, DegradationKind::kFaceMissing},
             {0.0, 0.5, 1.0}, cfg.seed))
      write_eval_csv(csv, r);
    return std::make_pair(log.str(), csv.str());
  };
  const auto a = run(), b = run();
  o.expect(a.first == b.first, "training logs differ");
  o.expect(a.second == b.second, "eval CSVs differ");
  if (o.pass)
    o.detail = "two runs: identical training logs (" + std::to_string(a.first.size()) +
               " bytes) and eval CSVs (" + std::to_string(a.second.size()) + " bytes)";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  enable_determinism();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"shape pipeline", shape_pipeline},
      {"SI-SNR oracle", si_snr_oracle},
      {"SI-SNRi identity", si_snri_identity},
      {"STFT loss", stft_loss},
      {"CE closed form", ce_closed_form},
      {"fusion properties", fusion_properties},
      {"gradient checks", gradient_checks},
      {"residual identities", residual_identities},
      {"degradation protocol", degradation_protocol},
      {"tokenizer oracles", tokenizer_oracles},
      {"overfit sanity", overfit},
      {"ablation surface", ablation_surface},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    failed += !r.pass;
    std::printf("[%s] %2d %-22s %s\n", r.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                r.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
