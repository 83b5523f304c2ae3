// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "cuesep/av_learner.hpp"

namespace cuesep {

struct DualStream {
  Var target;        // (H, K, T_v)
  Var interference;  // (H, K, T_v)
};

// Scaled dot-product attention over T_v: the target stream (pooled over K)
// queries the interference stream; the attended interference is subtracted
// from the target and added to the interference through separate projections.
class StreamCrossAttention {
 public:
  StreamCrossAttention() = default;
  StreamCrossAttention(const nn::Builder& b, int width);

  // `attn` (optional) receives the (T_q, T_k) attention matrix.
  DualStream operator()(Graph& g, const DualStream& s, Var* attn = nullptr) const;
  void zero_outputs();

 private:
  int width_ = 0;
  nn::ChannelLinear query_, key_, to_target_, to_interference_;
};

class BackendBlock {
 public:
  BackendBlock() = default;
  BackendBlock(const nn::Builder& b, int width, int hidden);

  DualStream operator()(Graph& g, const DualStream& s, Var* attn = nullptr) const;

  DualPathBlock target_path, interference_path;
  StreamCrossAttention attention;
};

struct BackendConfig {
  int num_blocks = 5;
  int width = 128;
  int lstm_hidden = 128;
  int feature_dim = 256;
};

// R_e (H, K, T_v) -> mask (N, K, T_v) >= 0. Audio only.
class Backend {
 public:
  Backend() = default;
  Backend(const nn::Builder& b, const BackendConfig& cfg);

  DualStream init_streams(Graph& g, Var fused) const;
  Var estimate_mask(Graph& g, Var fused) const;

  std::vector<BackendBlock> blocks;

 private:
  nn::ChannelLinear to_target_, to_interference_, mask_out_;
};

}  // namespace cuesep
