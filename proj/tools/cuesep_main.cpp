// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Command-line front end: train, eval, degrade, tokenize, ablate, dump-attention.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cuesep/experiments.hpp"

namespace fs = std::filesystem;
using namespace cuesep;

namespace {

// Flags shared by every verb that builds a run configuration.
struct RunFlags {
  std::string config_path;
  std::string preset;
  std::string cues;
  std::string fusion;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int steps = -1;
  bool deterministic = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value run configuration file");
    app->add_option("--preset", preset, "model size preset")
        ->check(CLI::IsMember({"fast", "full", "toy"}));
    app->add_option("--cues", cues, "enabled cues: any of spk,acoustic,semantic or none");
    app->add_option("--fusion", fusion, "cue fusion")->check(CLI::IsMember({"interaction", "concat"}));
    app->add_option("--set", overrides, "extra config entries as key=value");
    app->add_option("--steps", steps, "optimizer steps");
    app->add_flag("--deterministic", deterministic, "single-threaded, bit-reproducible run");
    app->add_option_function<std::uint64_t>(
        "--seed", [this](std::uint64_t s) { seed = s, seed_set = true; },
        "parameter, sample-order and degradation seed");
  }

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (!preset.empty()) set_option(cfg, "preset", preset);
    if (!cues.empty()) set_option(cfg, "cues", cues);
    if (!fusion.empty()) set_option(cfg, "fusion", fusion);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + kv);
      set_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed_set) cfg.seed = seed;
    if (steps >= 0) cfg.steps = steps;
    if (deterministic) cfg.deterministic = true;
    return cfg;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<DegradationKind> parse_kinds(const std::string& s) {
  if (s == "all")
    return {DegradationKind::kGaussianBlur, DegradationKind::kConcealment,
            DegradationKind::kMaskedFeature, DegradationKind::kFaceMissing};
  std::vector<DegradationKind> kinds;
  for (const auto& k : split_list(s)) kinds.push_back(parse_degradation(k));
  return kinds;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void write_pgm(const fs::path& p, const Tensor& frames, int t) {
  std::ofstream os(p, std::ios::binary);
  const int h = frames.dim(1), w = frames.dim(2);
  os << "P5\n" << w << ' ' << h << "\n255\n";
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = std::clamp(frames.at(t, y, x), 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
}

int cmd_train(const RunFlags& flags, const fs::path& out, double stop_db, int check_every) {
  const RunConfig cfg = flags.resolve();
  fs::create_directories(out);
  {
    auto os = open_out(out / "config.cfg");
    write_run_config(os, cfg);
  }
  Trainer trainer(cfg);
  std::cerr << "training " << cfg.model.preset << " model, "
            << trainer.model().params().num_scalars() << " parameters, " << cfg.steps << " steps\n";
  auto log = open_out(out / "train_log.csv");
  const auto t0 = std::chrono::steady_clock::now();
  trainer.train(&log, [&](const StepLog& row) {
    if (check_every <= 0 || row.step % check_every != 0) return true;
    const double si = trainer.train_sisnri();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "step %d  loss %.4f  train SI-SNRi %.2f dB  (%.0fs)\n", row.step, row.total,
                 si, secs);
    return !(stop_db > 0.0 && si >= stop_db);
  });
  save_checkpoint((out / "model.ckpt").string(), cfg, trainer.model());
  std::fprintf(stderr, "final train SI-SNRi %.3f dB after %d steps\n", trainer.train_sisnri(),
               trainer.steps_done());
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& kinds, const std::vector<double>& props,
             int samples, std::uint64_t seed, bool deterministic, const fs::path& out) {
  LoadedModel lm = load_checkpoint(ckpt);
  if (deterministic) lm.config.deterministic = true;
  if (lm.config.deterministic) enable_determinism();
  const auto data = heldout_corpus(lm.config, samples > 0 ? samples : lm.config.num_samples);
  const ModelExtractor ex(*lm.model);
  const auto reports = sweep_degradations(ex, data, parse_kinds(kinds), props, seed);
  fs::create_directories(out);
  for (const auto& r : reports) {
    const fs::path p = out / ("eval_" + r.model_tag + ".csv");
    auto os = open_out(p);
    write_eval_csv(os, r);
    std::printf("%s  mean SI-SNRi %.3f dB  mean SDR %.3f dB  -> %s\n", r.model_tag.c_str(),
                r.mean_sisnri(), r.mean_sdr(), p.string().c_str());
  }
  return 0;
}

int cmd_degrade(const std::string& kind_name, double proportion, std::uint64_t seed,
                double duration, const fs::path& out) {
  const DegradationKind kind = parse_degradation(kind_name);
  const FrameSeq video = synth_av_pair(seed, duration, 0).second;
  const DegradationSpec spec = make_degradation(kind, video.num_frames(), proportion, seed);
  fs::create_directories(out);
  {
    auto os = open_out(out / "mask.csv");
    os << "frame,masked\n";
    for (int t = 0; t < spec.mask.num_frames(); ++t) os << t << ',' << int(spec.mask.flags[t]) << '\n';
  }
  if (acts_on_features(kind)) {
    std::printf("%s acts on visual features: %d of %d frames masked, see %s\n", kind_name.c_str(),
                spec.mask.count(), spec.mask.num_frames(), (out / "mask.csv").string().c_str());
    return 0;
  }
  const FrameSeq bad = degrade(video, spec, seed);
  char name[32];
  for (int t = 0; t < bad.num_frames(); ++t) {
    std::snprintf(name, sizeof name, "frame_%03d.pgm", t);
    write_pgm(out / name, bad.frames, t);
  }
  std::printf("wrote %d frames (%d degraded) to %s\n", bad.num_frames(), spec.mask.count(),
              out.string().c_str());
  return 0;
}

int cmd_tokenize(const RunFlags& flags, const fs::path& out) {
  const RunConfig cfg = flags.resolve();
  const auto data = synth_corpus(cfg.corpus());
  const Supervision sup = build_supervision(data, cfg);
  fs::create_directories(out);
  if (!sup.acoustic_tokens.empty()) {
    auto os = open_out(out / "acoustic_codebook.json");
    save_codebook(os, sup.acoustic);
  }
  if (!sup.semantic_tokens.empty()) {
    auto os = open_out(out / "semantic_codebook.json");
    save_codebook(os, sup.semantic);
  }
  auto os = open_out(out / "tokens.csv");
  os << "sample_id,frame,acoustic,semantic\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int t_v = data[i].video.num_frames();
    for (int t = 0; t < t_v; ++t) {
      os << data[i].sample_id << ',' << t << ',';
      if (!sup.acoustic_tokens.empty()) os << sup.acoustic_tokens[i][t];
      os << ',';
      if (!sup.semantic_tokens.empty()) os << sup.semantic_tokens[i][t];
      os << '\n';
    }
  }
  std::printf("tokenized %zu clips into %s\n", data.size(), out.string().c_str());
  return 0;
}

int cmd_ablate(RunFlags flags, int heldout, const fs::path& out) {
  if (flags.steps < 0) flags.steps = 50;
  const RunConfig base = flags.resolve();
  const auto data = heldout_corpus(base, heldout > 0 ? heldout : base.num_samples);
  fs::create_directories(out);
  std::vector<AblationResult> rows;
  for (const auto& v : ablation_variants()) {
    auto log = open_out(out / ("train_" + v.label().replace(v.label().find('/'), 1, "_") + ".csv"));
    rows.push_back(run_ablation_variant(base, v, data, &log));
    const auto& r = rows.back();
    std::printf("%-28s params %8zu  train %.2f dB  eval %.2f dB\n", v.label().c_str(), r.num_params,
                r.train_sisnri, r.eval_sisnri);
    std::fflush(stdout);
  }
  auto os = open_out(out / "ablation.csv");
  write_ablation_csv(os, rows);
  return 0;
}

int cmd_dump_attention(const std::string& ckpt, int sample, const std::string& features,
                       const std::string& kind, double proportion, std::uint64_t seed,
                       const std::string& out) {
  LoadedModel lm = load_checkpoint(ckpt);
  const auto data = heldout_corpus(lm.config, sample + 1);
  std::vector<int> hs;
  for (const auto& f : split_list(features)) hs.push_back(std::stoi(f));
  std::optional<DegradationSpec> spec;
  if (!kind.empty())
    spec = make_degradation(parse_degradation(kind), data[sample].video.num_frames(), proportion, seed);
  const Tensor psi = attention_trace(*lm.model, data[sample], spec ? &*spec : nullptr, seed);
  if (out.empty() || out == "-") {
    write_attention_csv(std::cout, psi, hs);
  } else {
    auto os = open_out(out);
    write_attention_csv(os, psi, hs);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cue-driven audio-visual target speaker extraction"};
  app.require_subcommand(1);

  RunFlags train_flags;
  std::string train_out = "runs/train";
  double stop_db = 0.0;
  int check_every = 0;
  auto* train = app.add_subcommand("train", "train a model on the synthetic corpus");
  train_flags.attach(train);
  train->add_option("--out", train_out, "output directory (config, log, checkpoint)");
  train->add_option("--stop-at-db", stop_db, "stop once training SI-SNRi reaches this value");
  train->add_option("--check-every", check_every, "steps between training SI-SNRi checks");

  std::string ckpt, kinds = "all", eval_out = "runs/eval";
  std::vector<double> props = sweep_proportions();
  int eval_samples = 0;
  std::uint64_t eval_seed = 0;
  bool eval_det = false;
  auto* eval = app.add_subcommand("eval", "sweep degradations over a held-out set");
  eval->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  eval->add_option("--degrade", kinds, "kinds to sweep: comma list of gb,cc,mf,fm or all");
  eval->add_option("--proportion", props, "degraded proportions")->delimiter(',');
  eval->add_option("--samples", eval_samples, "held-out clips (default: training count)");
  eval->add_option("--seed", eval_seed, "degradation seed");
  eval->add_flag("--deterministic", eval_det, "single-threaded evaluation");
  eval->add_option("--out", eval_out, "directory for eval_<kind>.csv files");

  std::string deg_kind;
  double deg_p = 0.5, deg_dur = 2.0;
  std::uint64_t deg_seed = 0;
  std::string deg_out = "runs/degrade";
  auto* deg = app.add_subcommand("degrade", "apply a visual degradation to a synthetic clip");
  deg->add_option("--degrade", deg_kind, "gb, cc, mf or fm")->required();
  deg->add_option("--proportion", deg_p, "fraction of frames to corrupt")->check(CLI::Range(0.0, 1.0));
  deg->add_option("--seed", deg_seed, "clip and mask seed");
  deg->add_option("--duration", deg_dur, "clip length in seconds");
  deg->add_option("--out", deg_out, "directory for frames and mask.csv");

  RunFlags tok_flags;
  std::string tok_out = "runs/tokens";
  auto* tok = app.add_subcommand("tokenize", "fit the token codebooks and tokenize the corpus");
  tok_flags.attach(tok);
  tok->add_option("--out", tok_out, "directory for codebooks and tokens.csv");

  RunFlags abl_flags;
  std::string abl_out = "runs/ablate";
  int abl_heldout = 0;
  auto* abl = app.add_subcommand("ablate", "train every cue combination and the concat baseline");
  abl_flags.attach(abl);
  abl->add_option("--samples", abl_heldout, "held-out clips (default: training count)");
  abl->add_option("--out", abl_out, "directory for ablation.csv and logs");

  std::string att_ckpt, att_features = "0", att_kind, att_out;
  int att_sample = 0;
  double att_p = 0.0;
  std::uint64_t att_seed = 0;
  auto* att = app.add_subcommand("dump-attention", "write cue attention traces as CSV");
  att->add_option("--checkpoint", att_ckpt, "model checkpoint")->required();
  att->add_option("--sample", att_sample, "held-out clip index")->check(CLI::NonNegativeNumber);
  att->add_option("--features", att_features, "comma list of feature indices h");
  att->add_option("--degrade", att_kind, "optional degradation kind");
  att->add_option("--proportion", att_p, "degraded proportion")->check(CLI::Range(0.0, 1.0));
  att->add_option("--seed", att_seed, "degradation seed");
  att->add_option("--out", att_out, "output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_flags, train_out, stop_db, check_every);
    if (*eval) return cmd_eval(ckpt, kinds, props, eval_samples, eval_seed, eval_det, eval_out);
    if (*deg) return cmd_degrade(deg_kind, deg_p, deg_seed, deg_dur, deg_out);
    if (*tok) return cmd_tokenize(tok_flags, tok_out);
    if (*abl) return cmd_ablate(abl_flags, abl_heldout, abl_out);
    if (*att)
      return cmd_dump_attention(att_ckpt, att_sample, att_features, att_kind, att_p, att_seed, att_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
