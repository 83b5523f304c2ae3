// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/model.hpp"

#include <sstream>
#include <stdexcept>

namespace cuesep {

std::string to_string(FusionMode m) {
  return m == FusionMode::kInteraction ? "interaction" : "concat";
}

FusionMode parse_fusion(const std::string& s) {
  if (s == "interaction") return FusionMode::kInteraction;
  if (s == "concat") return FusionMode::kConcat;
  throw std::invalid_argument("unknown fusion mode '" + s + "' (expected interaction or concat)");
}

ModelConfig preset_config(const std::string& name) {
  ModelConfig c;
  c.preset = name;
  if (name == "full") {
    c.num_blocks = 10;
  } else if (name == "fast") {
    c.num_blocks = 5;
  } else if (name == "toy") {
    c.feature_dim = 64;
    c.width = 32;
    c.lstm_hidden = 32;
    c.chunk = 16;
    c.encoder_kernel = 160;
    c.encoder_stride = 80;
    c.visual_channels = {4, 8, 16};
    c.num_blocks = 2;
    c.acoustic_classes = 64;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (expected fast, full or toy)");
  }
  return c;
}

std::array<bool, kNumCues> parse_cues(const std::string& s) {
  std::array<bool, kNumCues> on{false, false, false};
  if (s == "none" || s.empty()) return on;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "spk" || item == "speaker") on[kSpeakerCue] = true;
    else if (item == "acoustic") on[kAcousticCue] = true;
    else if (item == "semantic") on[kSemanticCue] = true;
    else throw std::invalid_argument("unknown cue '" + item + "' (expected spk, acoustic, semantic)");
  }
  return on;
}

std::string cues_string(const std::array<bool, kNumCues>& cues) {
  static const char* names[kNumCues] = {"spk", "acoustic", "semantic"};
  std::string out;
  for (int j = 0; j < kNumCues; ++j)
    if (cues[j]) out += (out.empty() ? "" : ",") + std::string(names[j]);
  return out.empty() ? "none" : out;
}

CueSepModel::CueSepModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  require(cfg.chunk >= 2 && cfg.chunk % 2 == 0, "chunk size must be even");
  nn::Builder b(store_, seed);
  const int n = cfg.feature_dim, h = cfg.width;
  encoder = SpeechEncoder(b.scope("encoder"), n, cfg.encoder_kernel, cfg.encoder_stride);
  visual_encoder = VisualEncoder(b.scope("visual_encoder"), cfg.visual_channels, n);
  LearnerConfig lc;
  lc.feature_dim = n;
  lc.width = h;
  lc.lstm_hidden = cfg.lstm_hidden;
  lc.num_speakers = cfg.num_speakers;
  lc.acoustic_classes = cfg.acoustic_classes;
  lc.semantic_classes = cfg.semantic_classes;
  lc.speaker_cue = cfg.cues[kSpeakerCue];
  lc.acoustic_cue = cfg.cues[kAcousticCue];
  lc.semantic_cue = cfg.cues[kSemanticCue];
  low = LowLevelLearner(b.scope("low"), lc);
  high = HighLevelLearner(b.scope("high"), lc);
  context_audio_ = nn::ChannelLinear(b.scope("context.audio"), n, h);
  context_high_ = nn::ChannelLinear(b.scope("context.high"), n, h);
  for (int j = 0; j < kNumCues; ++j)
    if (cfg.cues[j]) branches[j] = CueBranch(b.scope(std::string("cue.") + cue_name(j)), h);
  if (cfg.fusion == FusionMode::kInteraction)
    attention = AttentionFusion(b.scope("fusion.attention"), h);
  else
    concat = ConcatFusion(b.scope("fusion.concat"), h);
  BackendConfig bc{cfg.num_blocks, h, cfg.lstm_hidden, n};
  backend = Backend(b.scope("backend"), bc);
  decoder = SpeechDecoder(b.scope("decoder"), n, cfg.encoder_kernel, cfg.encoder_stride);
}

ForwardOutput CueSepModel::forward(Graph& g, const Waveform& mixture, const FrameSeq& video,
                                   const FrameMask* feature_mask) const {
  const int len = mixture.length();
  const int h = cfg_.width, k = cfg_.chunk;
  ForwardOutput out;
  out.num_chunks = video_frames_for(len);
  out.raw_frames = raw_feature_frames(len, cfg_.encoder_kernel, cfg_.encoder_stride);
  out.padded_frames = padded_feature_frames(out.num_chunks, k);
  if (video.num_frames() != out.num_chunks)
    throw std::invalid_argument("video has " + std::to_string(video.num_frames()) +
                                " frames but the audio spans " + std::to_string(out.num_chunks));
  const int t_v = out.num_chunks;

  Var wav = g.constant(mixture.tensor());
  out.mixture_features = chunk_features(encoder.encode(g, wav, k), k);
  Var fv = visual_encoder.encode(g, g.constant(video.frames));
  if (feature_mask) {
    require(feature_mask->num_frames() == t_v, "feature mask length does not match the clip");
    Tensor keep({cfg_.feature_dim, t_v}, 1.0);
    for (int t = 0; t < t_v; ++t)
      if (feature_mask->flags[t])
        for (int c = 0; c < cfg_.feature_dim; ++c) keep.at(c, t) = 0.0;
    fv = ops::mul(fv, g.constant(std::move(keep)));
  }
  out.visual_features = fv;

  out.low = low(g, out.mixture_features, fv);
  out.high = high(g, out.low.audio, out.low.visual);
  out.context = ops::add(context_audio_(g, out.mixture_features), context_high_(g, out.high.audio));

  std::array<Var, kNumCues> cue_vars{
      out.low.speaker.valid()
          ? ops::broadcast_axis(out.low.speaker, 1, t_v)
          : Var(),
      out.low.acoustic, out.high.semantic};
  if (!cfg_.cues[kSemanticCue]) cue_vars[kSemanticCue] = Var();

  std::vector<Var> rels, enhanced;
  for (int j = 0; j < kNumCues; ++j) {
    if (cfg_.cues[j]) {
      rels.push_back(ops::reshape(branches[j].reliability(g, cue_vars[j], out.context), {1, h, t_v}));
      enhanced.push_back(ops::reshape(branches[j].enhance(g, cue_vars[j], out.context), {1, h, k, t_v}));
    } else {
      rels.push_back(g.constant(Tensor({1, h, t_v})));
      enhanced.push_back(ops::reshape(out.context, {1, h, k, t_v}));
    }
  }
  out.rels = ops::concat(rels, 0);
  out.enhanced = ops::concat(enhanced, 0);

  if (cfg_.fusion == FusionMode::kConcat) {
    out.fused = concat(g, out.enhanced);
  } else if (cfg_.any_cue()) {
    out.psi = attention.weights(g, out.rels, cfg_.cues);
    out.fused = fuse(out.psi, out.enhanced);
  } else {
    // Every branch is the identity, so any convex weighting returns R_a.
    out.psi = g.constant(Tensor({kNumCues, h, t_v}, 1.0 / kNumCues));
    out.fused = out.context;
  }

  out.mask = backend.estimate_mask(g, out.fused);
  Var masked = apply_mask(out.mixture_features, out.mask);
  out.estimate = decoder.decode(g, dechunk_features(masked, k), len);
  return out;
}

}  // namespace cuesep
