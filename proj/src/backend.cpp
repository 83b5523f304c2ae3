// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/backend.hpp"

#include <cmath>

namespace cuesep {

StreamCrossAttention::StreamCrossAttention(const nn::Builder& b, int width)
    : width_(width),
      query_(b.scope("query"), width, width),
      key_(b.scope("key"), width, width),
      to_target_(b.scope("to_target"), width, width),
      to_interference_(b.scope("to_interference"), width, width) {}

DualStream StreamCrossAttention::operator()(Graph& g, const DualStream& s, Var* attn) const {
  const int h = s.target.dim(0), k = s.target.dim(1), t_v = s.target.dim(2);
  Var q = query_(g, ops::mean_axis(s.target, 1));        // (H, T)
  Var key = key_(g, ops::mean_axis(s.interference, 1));  // (H, T)
  Var scores = ops::scale(ops::matmul(ops::transpose(q), key), 1.0 / std::sqrt(double(width_)));
  Var a = ops::softmax(scores, 1);  // rows: queries
  if (attn) *attn = a;
  // summary[:, t] = sum_s interference[:, s] * a[t, s]
  Var flat = ops::reshape(s.interference, {h * k, t_v});
  Var summary = ops::reshape(ops::matmul(flat, ops::transpose(a)), {h, k, t_v});
  return {ops::sub(s.target, to_target_(g, summary)),
          ops::add(s.interference, to_interference_(g, summary))};
}

void StreamCrossAttention::zero_outputs() {
  to_target_.zero();
  to_interference_.zero();
}

BackendBlock::BackendBlock(const nn::Builder& b, int width, int hidden)
    : target_path(b.scope("target"), width, hidden),
      interference_path(b.scope("interference"), width, hidden),
      attention(b.scope("cross_attention"), width) {}

DualStream BackendBlock::operator()(Graph& g, const DualStream& s, Var* attn) const {
  DualStream mid{target_path(g, s.target), interference_path(g, s.interference)};
  return attention(g, mid, attn);
}

Backend::Backend(const nn::Builder& b, const BackendConfig& cfg) {
  require(cfg.num_blocks >= 1, "backend needs at least one block");
  to_target_ = nn::ChannelLinear(b.scope("to_target"), cfg.width, cfg.width);
  to_interference_ = nn::ChannelLinear(b.scope("to_interference"), cfg.width, cfg.width);
  for (int i = 0; i < cfg.num_blocks; ++i)
    blocks.emplace_back(b.scope("block" + std::to_string(i)), cfg.width, cfg.lstm_hidden);
  mask_out_ = nn::ChannelLinear(b.scope("mask_out"), cfg.width, cfg.feature_dim);
}

DualStream Backend::init_streams(Graph& g, Var fused) const {
  return {to_target_(g, fused), to_interference_(g, fused)};
}

Var Backend::estimate_mask(Graph& g, Var fused) const {
  DualStream s = init_streams(g, fused);
  for (const auto& blk : blocks) s = blk(g, s);
  return ops::relu(mask_out_(g, s.target));
}

}  // namespace cuesep
