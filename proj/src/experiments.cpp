// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/experiments.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace cuesep {

std::vector<MixtureSample> heldout_corpus(const RunConfig& cfg, int num_samples) {
  CorpusSpec spec = cfg.corpus();
  spec.num_samples = num_samples;
  spec.seed = cfg.data_seed ^ 0x68656c646f7574ULL;
  return synth_corpus(spec);
}

const std::vector<double>& sweep_proportions() {
  static const std::vector<double> p{0.0, 0.25, 0.5, 0.75, 1.0};
  return p;
}

std::vector<EvalReport> sweep_degradations(const Extractor& ex,
                                           const std::vector<MixtureSample>& data,
                                           const std::vector<DegradationKind>& kinds,
                                           const std::vector<double>& proportions,
                                           std::uint64_t seed) {
  std::vector<EvalReport> out;
  for (DegradationKind k : kinds) {
    std::vector<EvalCase> cases;
    for (double p : proportions) cases.push_back({k, p});
    EvalReport r = run_eval(ex, data, cases, seed);
    r.model_tag = to_string(k);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> cue_head_prefixes(int cue) {
  switch (cue) {
    case kSpeakerCue: return {"low.speaker_head", "low.speaker_cls", "cue.speaker"};
    case kAcousticCue: return {"low.acoustic_head", "low.acoustic_cls", "cue.acoustic"};
    case kSemanticCue: return {"high.semantic_cls", "cue.semantic"};
  }
  throw std::out_of_range("cue index " + std::to_string(cue));
}

std::string AblationVariant::label() const {
  return (cues[0] || cues[1] || cues[2] ? cues_string(cues) : std::string("none")) + "/" +
         to_string(fusion);
}

std::vector<AblationVariant> ablation_variants() {
  std::vector<AblationVariant> v;
  for (int bits = 7; bits >= 0; --bits)
    v.push_back({{(bits & 4) != 0, (bits & 2) != 0, (bits & 1) != 0}, FusionMode::kInteraction});
  v.push_back({{true, true, true}, FusionMode::kConcat});
  return v;
}

AblationResult run_ablation_variant(const RunConfig& base, const AblationVariant& v,
                                    const std::vector<MixtureSample>& heldout, std::ostream* log) {
  RunConfig cfg = base;
  cfg.model.cues = v.cues;
  cfg.model.fusion = v.fusion;
  Trainer t(cfg);
  AblationResult r;
  r.variant = v;
  r.num_params = t.model().params().num_scalars();
  std::vector<std::string> disabled;
  for (int j = 0; j < kNumCues; ++j)
    if (!v.cues[j])
      for (auto& p : cue_head_prefixes(j)) disabled.push_back(p);
  t.train(log, [&](const StepLog& row) {
    r.final_loss = row.total;
    for (const auto& p : disabled)
      r.disabled_grad_norm = std::max(r.disabled_grad_norm, grad_norm(t.model().params(), p));
    return true;
  });
  r.train_sisnri = t.train_sisnri();
  const ModelExtractor ex(t.model());
  r.eval_sisnri =
      run_eval(ex, heldout, {EvalCase{DegradationKind::kFaceMissing, 0.0}}, cfg.seed).mean_sisnri();
  return r;
}

void write_ablation_csv(std::ostream& os, const std::vector<AblationResult>& rows) {
  os << "cues,fusion,params,final_loss,train_sisnri_db,eval_sisnri_db,disabled_grad_norm\n";
  char buf[256];
  for (const auto& r : rows) {
    const auto& c = r.variant.cues;
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.9f,%.9f,%.9f,%.3g\n",
                  (c[0] || c[1] || c[2] ? cues_string(c) : std::string("none")).c_str(),
                  to_string(r.variant.fusion).c_str(), r.num_params, r.final_loss, r.train_sisnri,
                  r.eval_sisnri, r.disabled_grad_norm);
    os << buf;
  }
}

Tensor attention_trace(const CueSepModel& model, const MixtureSample& sample,
                       const DegradationSpec* degradation, std::uint64_t seed) {
  if (model.config().fusion != FusionMode::kInteraction)
    throw std::invalid_argument("attention traces need the interaction fusion mode");
  FrameSeq video = sample.video;
  const FrameMask* feature_mask = nullptr;
  if (degradation) {
    if (acts_on_features(degradation->kind)) feature_mask = &degradation->mask;
    else video = degrade(sample.video, *degradation, seed);
  }
  Graph g(false);
  return model.forward(g, sample.mixture, video, feature_mask).psi.value();
}

void write_attention_csv(std::ostream& os, const Tensor& psi, const std::vector<int>& features) {
  require(psi.rank() == 3 && psi.dim(0) == kNumCues, "attention_csv: psi must be (3, H, T)");
  const int h_count = psi.dim(1), t_v = psi.dim(2);
  for (int h : features)
    if (h < 0 || h >= h_count)
      throw std::out_of_range("feature index " + std::to_string(h) + " outside [0, " +
                              std::to_string(h_count) + ")");
  os << 't';
  for (int h : features)
    for (int j = 0; j < kNumCues; ++j) os << ',' << cue_name(j) << "_h" << h;
  os << '\n';
  char buf[32];
  for (int t = 0; t < t_v; ++t) {
    os << t;
    for (int h : features)
      for (int j = 0; j < kNumCues; ++j) {
        std::snprintf(buf, sizeof buf, ",%.9f", psi.at(j, h, t));
        os << buf;
      }
    os << '\n';
  }
}

}  // namespace cuesep
