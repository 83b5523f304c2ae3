// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/cue_interaction.hpp"

#include <cmath>

namespace cuesep {

const char* cue_name(int j) {
  switch (j) {
    case kSpeakerCue: return "speaker";
    case kAcousticCue: return "acoustic";
    case kSemanticCue: return "semantic";
  }
  return "?";
}

CueBranch::CueBranch(const nn::Builder& b, int width, int kernel)
    : h_net(b.scope("h"), width, width, kernel),
      q_net(b.scope("q"), width, width, kernel),
      g_net(b.scope("g"), width, width),
      p_net(b.scope("p"), width, width) {}

namespace {
void check_aligned(Var cue, Var speech) {
  if (cue.value().rank() != 2 || speech.value().rank() != 3 || cue.dim(0) != speech.dim(0) ||
      cue.dim(1) != speech.dim(2))
    throw std::invalid_argument("cue " + shape_str(cue.shape()) +
                                " is not aligned with speech " + shape_str(speech.shape()));
}
}  // namespace

Var CueBranch::reliability(Graph& g, Var cue, Var speech) const {
  check_aligned(cue, speech);
  Var ctx = ops::sigmoid(q_net(g, ops::mean_axis(speech, 1)));
  return ops::mul(h_net(g, cue), ctx);
}

Var CueBranch::enhance(Graph& g, Var cue, Var speech) const {
  check_aligned(cue, speech);
  Var gate = ops::sigmoid(p_net(g, speech));
  Var cue_k = ops::broadcast_axis(cue, 1, speech.dim(1));
  return ops::add(speech, g_net(g, ops::mul(cue_k, gate)));
}

void CueBranch::zero_enhance_output() { g_net.zero(); }

void CueBranch::drop_biases() {
  for (Parameter* p : {h_net.bias, q_net.bias, g_net.bias, p_net.bias})
    if (p) p->value.fill(0.0);
}

AttentionFusion::AttentionFusion(const nn::Builder& b, int width, int time_kernel, int cue_kernel)
    : width_(width), cue_kernel_(cue_kernel) {
  require(time_kernel % 2 == 1 && cue_kernel % 2 == 1 && cue_kernel <= kNumCues,
          "attention kernels must be odd and the cue kernel at most 3");
  const double tb = 1.0 / std::sqrt(static_cast<double>(time_kernel));
  time_weight = &b.uniform("time.weight", {kNumCues * width, time_kernel}, tb);
  time_bias = &b.constant("time.bias", {kNumCues * width}, 0.0);
  const double cb = 1.0 / std::sqrt(static_cast<double>(cue_kernel));
  cue_weight = &b.uniform("cue.weight", {width, cue_kernel}, cb);
  cue_bias = &b.constant("cue.bias", {width}, 0.0);
}

Var AttentionFusion::logits(Graph& g, Var rels) const {
  require(rels.value().rank() == 3 && rels.dim(0) == kNumCues && rels.dim(1) == width_,
          "attention expects a (3, H, T_v) reliability stack, got " + shape_str(rels.shape()));
  const int t_v = rels.dim(2);
  Var x = ops::depthwise_conv1d(ops::reshape(rels, {kNumCues * width_, t_v}),
                                g.param(*time_weight), g.param(*time_bias));
  x = ops::reshape(x, {kNumCues, width_, t_v});
  // Circular convolution over the cue axis, one filter per feature h.
  Var w = g.param(*cue_weight);
  const int half = cue_kernel_ / 2;
  Var acc = ops::broadcast_axis(ops::broadcast_axis(g.param(*cue_bias), 1, t_v), 0, kNumCues);
  for (int o = 0; o < cue_kernel_; ++o) {
    const int shift = ((o - half) % kNumCues + kNumCues) % kNumCues;
    // rolled[j] = x[(j + shift) mod 3]
    Var rolled = shift == 0 ? x
                            : ops::concat({ops::slice(x, 0, shift, kNumCues - shift),
                                           ops::slice(x, 0, 0, shift)},
                                          0);
    Var tap = ops::reshape(ops::slice(w, 1, o, 1), {width_});
    Var tap_b = ops::broadcast_axis(ops::broadcast_axis(tap, 1, t_v), 0, kNumCues);
    acc = ops::add(acc, ops::mul(tap_b, rolled));
  }
  return acc;
}

Var AttentionFusion::weights(Graph& g, Var rels, const std::array<bool, kNumCues>& enabled) const {
  return ops::softmax(logits(g, rels), 0, {enabled[0], enabled[1], enabled[2]});
}

Var fuse(Var psi, Var enhanced) {
  require(enhanced.value().rank() == 4 && psi.value().rank() == 3 &&
              psi.dim(0) == enhanced.dim(0) && psi.dim(1) == enhanced.dim(1) &&
              psi.dim(2) == enhanced.dim(3),
          "fuse: psi " + shape_str(psi.shape()) + " vs enhanced " + shape_str(enhanced.shape()));
  Var psi_k = ops::broadcast_axis(psi, 2, enhanced.dim(2));
  return ops::sum_axis(ops::mul(psi_k, enhanced), 0);
}

ConcatFusion::ConcatFusion(const nn::Builder& b, int width)
    : proj_(b.scope("proj"), kNumCues * width, width) {}

Var ConcatFusion::operator()(Graph& g, Var enhanced) const {
  const Shape& s = enhanced.shape();
  Var stacked = ops::reshape(enhanced, {s[0] * s[1], s[2], s[3]});
  return proj_(g, stacked);
}

}  // namespace cuesep
