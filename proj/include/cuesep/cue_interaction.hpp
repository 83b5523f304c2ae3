// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>

#include "cuesep/nn.hpp"

namespace cuesep {

// Stacking order of cue branches everywhere (psi, enhanced stack, CSV dumps).
enum CueIndex : int { kSpeakerCue = 0, kAcousticCue = 1, kSemanticCue = 2 };
inline constexpr int kNumCues = 3;
const char* cue_name(int j);

// One cue's reliability and enhancement networks.
//   reliability = Hn(cue) * sigmoid(Qn(mean_K(R_a)))          (H, T_v)
//   enhanced    = R_a + Gn(bcast_K(cue) * sigmoid(Pn(R_a)))   (H, K, T_v)
// Hn, Qn are temporal convolutions; Gn, Pn are pointwise.
class CueBranch {
 public:
  CueBranch() = default;
  CueBranch(const nn::Builder& b, int width, int kernel = 3);

  Var reliability(Graph& g, Var cue, Var speech) const;
  Var enhance(Graph& g, Var cue, Var speech) const;

  void zero_enhance_output();
  void drop_biases();  // for the bias-free identities

  nn::TimeConv h_net, q_net;
  nn::ChannelLinear g_net, p_net;
};

// Reliability-driven fusion of the three cue-enhanced features.
// The (3, H, T_v) reliability stack passes a per-(j, h) temporal convolution
// and then a per-h circular convolution across j; a softmax over j gives psi.
class AttentionFusion {
 public:
  AttentionFusion() = default;
  AttentionFusion(const nn::Builder& b, int width, int time_kernel = 5, int cue_kernel = 3);

  Var logits(Graph& g, Var reliabilities) const;
  // Disabled cues get weight zero; the rest renormalize.
  Var weights(Graph& g, Var reliabilities, const std::array<bool, kNumCues>& enabled) const;

  int cue_kernel() const { return cue_kernel_; }

  Parameter* time_weight = nullptr;  // (3H, time_kernel)
  Parameter* time_bias = nullptr;    // (3H)
  Parameter* cue_weight = nullptr;   // (H, cue_kernel)
  Parameter* cue_bias = nullptr;     // (H)

 private:
  int width_ = 0, cue_kernel_ = 3;
};

// R_e[h,k,t] = sum_j psi[j,h,t] * enhanced[j,h,k,t]
Var fuse(Var psi, Var enhanced);

// Baseline fusion: channel concatenation of the three enhanced features and a
// pointwise projection back to H.
class ConcatFusion {
 public:
  ConcatFusion() = default;
  ConcatFusion(const nn::Builder& b, int width);

  Var operator()(Graph& g, Var enhanced) const;

 private:
  nn::ChannelLinear proj_;
};

}  // namespace cuesep
