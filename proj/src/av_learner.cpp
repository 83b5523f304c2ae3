// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/av_learner.hpp"

namespace cuesep {

DualPathBlock::DualPathBlock(const nn::Builder& b, int width, int hidden) {
  intra_rnn_ = nn::BiLstm(b.scope("intra.rnn"), width, hidden);
  intra_proj_ = nn::Dense(b.scope("intra.proj"), 2 * hidden, width);
  intra_norm_ = nn::GlobalNorm(b.scope("intra.norm"), width);
  inter_rnn_ = nn::BiLstm(b.scope("inter.rnn"), width, hidden);
  inter_proj_ = nn::Dense(b.scope("inter.proj"), 2 * hidden, width);
  inter_norm_ = nn::GlobalNorm(b.scope("inter.norm"), width);
}

Var DualPathBlock::intra(Graph& g, Var x) const {
  // (d, K, T) -> (T, K, d): one sequence over K per chunk.
  Var seq = ops::permute(x, {2, 1, 0});
  Var y = intra_proj_(g, intra_rnn_(g, seq));
  return ops::add(x, intra_norm_(g, ops::permute(y, {2, 1, 0})));
}

Var DualPathBlock::inter(Graph& g, Var x) const {
  // (d, K, T) -> (K, T, d): one sequence over T per intra-chunk position.
  Var seq = ops::permute(x, {1, 2, 0});
  Var y = inter_proj_(g, inter_rnn_(g, seq));
  return ops::add(x, inter_norm_(g, ops::permute(y, {2, 0, 1})));
}

Var DualPathBlock::operator()(Graph& g, Var x) const { return inter(g, intra(g, x)); }

void DualPathBlock::zero_projections() {
  for (const nn::Dense* d : {&intra_proj_, &inter_proj_}) {
    d->weight->value.fill(0.0);
    d->bias->value.fill(0.0);
  }
}

VisualUpdate::VisualUpdate(const nn::Builder& b, int width, int kernel) : kernel_(kernel) {
  conv1_ = nn::TimeConv(b.scope("conv1"), width, width, kernel, 1);
  act_ = nn::PRelu(b.scope("act"));
  norm_ = nn::FrameNorm(b.scope("norm"), width);
  conv2_ = nn::TimeConv(b.scope("conv2"), width, width, kernel, 2);
}

Var VisualUpdate::operator()(Graph& g, Var x) const {
  return ops::add(x, conv2_(g, norm_(g, act_(g, conv1_(g, x)))));
}

int VisualUpdate::receptive_radius() const { return (kernel_ - 1) / 2 + 2 * ((kernel_ - 1) / 2); }

void VisualUpdate::zero_weights() {
  conv1_.zero();
  conv2_.zero();
}

GatingNet::GatingNet(const nn::Builder& b, int width)
    : conv(b.scope("conv"), width, width), norm(b.scope("norm"), width) {}

Interaction::Interaction(const nn::Builder& b, int width)
    : gate_audio(b.scope("p_audio"), width),
      out_audio(b.scope("g_audio"), width),
      gate_visual(b.scope("p_visual"), width),
      out_visual(b.scope("g_visual"), width) {}

std::pair<Var, Var> Interaction::operator()(Graph& g, Var audio, Var visual) const {
  require(audio.value().rank() == 3 && visual.value().rank() == 2,
          "interaction expects audio (d, K, T) and visual (d, T)");
  if (audio.dim(2) != visual.dim(1) || audio.dim(0) != visual.dim(0))
    throw std::invalid_argument("interaction: audio " + shape_str(audio.shape()) +
                                " and visual " + shape_str(visual.shape()) + " are not aligned");
  const int k = audio.dim(1);
  Var gate_a = ops::sigmoid(gate_audio(g, audio));
  Var audio_new =
      ops::add(audio, out_audio(g, ops::mul(ops::broadcast_axis(visual, 1, k), gate_a)));
  Var gate_c = ops::sigmoid(gate_visual(g, visual));
  Var visual_new = ops::add(visual, out_visual(g, ops::mul(ops::mean_axis(audio, 1), gate_c)));
  return {audio_new, visual_new};
}

void Interaction::zero_outputs() {
  out_audio.conv.zero();
  out_visual.conv.zero();
}

LowLevelLearner::LowLevelLearner(const nn::Builder& b, const LearnerConfig& cfg) : cfg_(cfg) {
  const int n = cfg.feature_dim, h = cfg.width;
  audio_in_ = nn::ChannelLinear(b.scope("audio_in"), n, h);
  visual_in_ = nn::ChannelLinear(b.scope("visual_in"), n, h);
  audio_update = DualPathBlock(b.scope("audio_update"), h, cfg.lstm_hidden);
  visual_update = VisualUpdate(b.scope("visual_update"), h);
  interaction = Interaction(b.scope("interaction"), h);
  visual_skip_ = nn::ChannelLinear(b.scope("visual_skip"), n, h);
  if (cfg.speaker_cue) {
    speaker_head_ = nn::ChannelLinear(b.scope("speaker_head"), h, h);
    speaker_cls_ = nn::ChannelLinear(b.scope("speaker_cls"), h, cfg.num_speakers);
  }
  if (cfg.acoustic_cue) {
    acoustic_head_ = nn::ChannelLinear(b.scope("acoustic_head"), h, h);
    acoustic_cls_ = nn::ChannelLinear(b.scope("acoustic_cls"), h, cfg.acoustic_classes);
  }
}

LowLevelOutput LowLevelLearner::operator()(Graph& g, Var fa, Var fv) const {
  Var ia = audio_update(g, audio_in_(g, fa));
  Var ic = visual_update(g, visual_in_(g, fv));
  auto [ia2, ic2] = interaction(g, ia, ic);
  LowLevelOutput out;
  out.interacted_visual = ic2;
  if (cfg_.speaker_cue) {
    Var pooled = ops::reshape(ops::mean_axis(ic2, 1), {cfg_.width, 1});
    Var cs = speaker_head_(g, pooled);
    out.speaker = ops::reshape(cs, {cfg_.width});
    out.speaker_logits = speaker_cls_(g, cs);
  }
  if (cfg_.acoustic_cue) {
    out.acoustic = acoustic_head_(g, ic2);
    out.acoustic_logits = acoustic_cls_(g, out.acoustic);
  }
  out.visual = ops::add(ic2, visual_skip_(g, fv));
  out.audio = ia2;
  return out;
}

HighLevelLearner::HighLevelLearner(const nn::Builder& b, const LearnerConfig& cfg) : cfg_(cfg) {
  const int h = cfg.width;
  audio_update = DualPathBlock(b.scope("audio_update"), h, cfg.lstm_hidden);
  visual_update = VisualUpdate(b.scope("visual_update"), h);
  interaction = Interaction(b.scope("interaction"), h);
  audio_out_ = nn::ChannelLinear(b.scope("audio_out"), h, cfg.feature_dim);
  if (cfg.semantic_cue)
    semantic_cls_ = nn::ChannelLinear(b.scope("semantic_cls"), h, cfg.semantic_classes);
}

HighLevelOutput HighLevelLearner::operator()(Graph& g, Var fa_l, Var fc_l) const {
  Var ia = audio_update(g, fa_l);
  Var ic = visual_update(g, fc_l);
  auto [ia2, ic2] = interaction(g, ia, ic);
  HighLevelOutput out;
  out.audio = audio_out_(g, ia2);
  out.semantic = ic2;
  if (cfg_.semantic_cue) out.semantic_logits = semantic_cls_(g, ic2);
  return out;
}

}  // namespace cuesep
