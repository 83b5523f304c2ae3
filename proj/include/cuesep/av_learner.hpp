// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <utility>

#include "cuesep/nn.hpp"

namespace cuesep {

// Intra-chunk (over K) then inter-chunk (over T_v) bidirectional LSTM pass on
// a (d, K, T_v) stream. Each pass: x + GN(Linear(BiLSTM(x))).
class DualPathBlock {
 public:
  DualPathBlock() = default;
  DualPathBlock(const nn::Builder& b, int width, int hidden);

  Var operator()(Graph& g, Var x) const;
  Var intra(Graph& g, Var x) const;
  Var inter(Graph& g, Var x) const;
  void zero_projections();

 private:
  nn::BiLstm intra_rnn_, inter_rnn_;
  nn::Dense intra_proj_, inter_proj_;
  nn::GlobalNorm intra_norm_, inter_norm_;
};

// Residual dilated temporal convolution on a (H, T_v) visual stream:
// x + conv_d2(LN(PReLU(conv_d1(x)))).
class VisualUpdate {
 public:
  VisualUpdate() = default;
  VisualUpdate(const nn::Builder& b, int width, int kernel = 3);

  Var operator()(Graph& g, Var x) const;
  // Frames on either side that can influence one output frame.
  int receptive_radius() const;
  void zero_weights();

 private:
  int kernel_ = 3;
  nn::TimeConv conv1_, conv2_;
  nn::PRelu act_;
  nn::FrameNorm norm_;
};

// Pointwise conv followed by global normalization.
struct GatingNet {
  nn::ChannelLinear conv;
  nn::GlobalNorm norm;

  GatingNet() = default;
  GatingNet(const nn::Builder& b, int width);
  Var operator()(Graph& g, Var x) const { return norm(g, conv(g, x)); }
};

// Cross-modal gated residual update:
//   a' = a + G_a(bcast_K(c) * sigmoid(P_a(a)))
//   c' = c + G_c(mean_K(a) * sigmoid(P_c(c)))
// with a (d, K, T_v) and c (d, T_v).
class Interaction {
 public:
  Interaction() = default;
  Interaction(const nn::Builder& b, int width);

  std::pair<Var, Var> operator()(Graph& g, Var audio, Var visual) const;
  // Zeroes both output networks so the update is the identity.
  void zero_outputs();

  GatingNet gate_audio, out_audio, gate_visual, out_visual;
};

struct LearnerConfig {
  int feature_dim = 256;  // N
  int width = 128;        // H, also the learner's audio width
  int lstm_hidden = 128;
  int num_speakers = 16;
  int acoustic_classes = 512;
  int semantic_classes = 48;
  bool speaker_cue = true;
  bool acoustic_cue = true;
  bool semantic_cue = true;
};

struct LowLevelOutput {
  Var audio;            // F_a_l  (H, K, T_v)
  Var visual;           // F_c_l  (H, T_v)
  Var speaker;          // C_s    (H); invalid when the cue is off
  Var speaker_logits;   // (speakers, 1)
  Var acoustic;         // C_a    (H, T_v)
  Var acoustic_logits;  // (acoustic classes, T_v)
  Var interacted_visual;  // I_c'
};

class LowLevelLearner {
 public:
  LowLevelLearner() = default;
  LowLevelLearner(const nn::Builder& b, const LearnerConfig& cfg);

  // fa: (N, K, T_v) chunked speech; fv: (N, T_v) visual features.
  LowLevelOutput operator()(Graph& g, Var fa, Var fv) const;

  DualPathBlock audio_update;
  VisualUpdate visual_update;
  Interaction interaction;

 private:
  LearnerConfig cfg_;
  nn::ChannelLinear audio_in_, visual_in_, visual_skip_;
  nn::ChannelLinear speaker_head_, speaker_cls_, acoustic_head_, acoustic_cls_;
};

struct HighLevelOutput {
  Var audio;            // F_a_h projected back to N: (N, K, T_v)
  Var semantic;         // C_w = F_c_h (H, T_v)
  Var semantic_logits;  // (48, T_v); invalid when the cue is off
};

class HighLevelLearner {
 public:
  HighLevelLearner() = default;
  HighLevelLearner(const nn::Builder& b, const LearnerConfig& cfg);

  HighLevelOutput operator()(Graph& g, Var fa_l, Var fc_l) const;

  DualPathBlock audio_update;
  VisualUpdate visual_update;
  Interaction interaction;

 private:
  LearnerConfig cfg_;
  nn::ChannelLinear audio_out_, semantic_cls_;
};

}  // namespace cuesep
