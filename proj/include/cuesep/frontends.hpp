// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>

#include "cuesep/nn.hpp"
#include "cuesep/types.hpp"

namespace cuesep {

// Length bookkeeping between samples, encoder columns and chunks.
int raw_feature_frames(int num_samples, int kernel, int stride);
// Columns needed for t_v chunks of width `chunk` at hop chunk/2.
int padded_feature_frames(int t_v, int chunk);
// Inverse of padded_feature_frames; throws "unpadded feature" otherwise.
int chunk_count(int feature_frames, int chunk);

// Strided 1-D convolution of the waveform followed by PReLU.
class SpeechEncoder {
 public:
  SpeechEncoder() = default;
  SpeechEncoder(const nn::Builder& b, int filters, int kernel, int stride);

  // (N, floor((L - kernel) / stride) + 1)
  Var encode_raw(Graph& g, Var wav) const;
  // Raw features right-padded with zeros so they tile into T_v chunks,
  // T_v = round(L / 16000 * 25).
  Var encode(Graph& g, Var wav, int chunk) const;

  int filters() const { return filters_; }
  int kernel() const { return kernel_; }
  int stride() const { return stride_; }
  Parameter& bias() const { return *proj_.bias; }

 private:
  int filters_ = 0, kernel_ = 0, stride_ = 0;
  nn::Dense proj_;
  nn::PRelu act_;
};

// Maps every feature column to a `kernel`-sample frame and overlap-adds the
// frames at `stride`, truncating to the requested length.
class SpeechDecoder {
 public:
  SpeechDecoder() = default;
  SpeechDecoder(const nn::Builder& b, int filters, int kernel, int stride);

  Var decode(Graph& g, Var features, int num_samples) const;

 private:
  int kernel_ = 0, stride_ = 0;
  nn::Dense proj_;
};

// Per-frame stack of four stride-2 3x3 convolutions with ReLU, then global
// average pooling: (T_v, 88, 88) -> (N, T_v).
class VisualEncoder {
 public:
  VisualEncoder() = default;
  VisualEncoder(const nn::Builder& b, std::array<int, 3> channels, int out_dim);

  Var encode(Graph& g, Var frames) const;

 private:
  std::array<Parameter*, 4> weights_{};
  std::array<Parameter*, 4> biases_{};
};

// (N, T_f) -> (N, K, T_v) at hop K/2, and back by averaged overlap-add.
Var chunk_features(Var f, int chunk);
Var dechunk_features(Var chunks, int chunk);

Var apply_mask(Var features, Var mask);

}  // namespace cuesep
