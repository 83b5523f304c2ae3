// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/frontends.hpp"

#include <cmath>
#include <stdexcept>

namespace cuesep {

int raw_feature_frames(int num_samples, int kernel, int stride) {
  if (num_samples < kernel)
    throw std::invalid_argument("clip of " + std::to_string(num_samples) +
                                " samples is shorter than one encoder kernel (" +
                                std::to_string(kernel) + ")");
  return (num_samples - kernel) / stride + 1;
}

int padded_feature_frames(int t_v, int chunk) {
  require(t_v >= 1 && chunk >= 2 && chunk % 2 == 0, "padded_feature_frames: bad geometry");
  return chunk + (t_v - 1) * (chunk / 2);
}

int chunk_count(int feature_frames, int chunk) {
  const int hop = chunk / 2;
  if (feature_frames < chunk || (feature_frames - chunk) % hop != 0)
    throw std::invalid_argument("unpadded feature: " + std::to_string(feature_frames) +
                                " columns do not tile into chunks of " + std::to_string(chunk));
  return (feature_frames - chunk) / hop + 1;
}

SpeechEncoder::SpeechEncoder(const nn::Builder& b, int filters, int kernel, int stride)
    : filters_(filters), kernel_(kernel), stride_(stride) {
  proj_ = nn::Dense(b.scope("conv"), kernel, filters);
  proj_.bias->value.fill(0.0);
  act_ = nn::PRelu(b.scope("act"));
}

Var SpeechEncoder::encode_raw(Graph& g, Var wav) const {
  require(wav.value().rank() == 1, "speech encoder expects a 1-D waveform");
  raw_feature_frames(wav.dim(0), kernel_, stride_);
  Var frames = ops::frame_signal(wav, kernel_, stride_);
  return ops::permute(act_(g, proj_(g, frames)), {1, 0});
}

Var SpeechEncoder::encode(Graph& g, Var wav, int chunk) const {
  Var raw = encode_raw(g, wav);
  const int t_v = video_frames_for(wav.dim(0));
  const int padded = padded_feature_frames(t_v, chunk);
  if (raw.dim(1) > padded)
    throw std::invalid_argument("encoder geometry yields " + std::to_string(raw.dim(1)) +
                                " columns, more than the " + std::to_string(padded) +
                                " that tile into " + std::to_string(t_v) + " chunks");
  return ops::resize_axis(raw, 1, padded);
}

SpeechDecoder::SpeechDecoder(const nn::Builder& b, int filters, int kernel, int stride)
    : kernel_(kernel), stride_(stride) {
  proj_ = nn::Dense(b.scope("linear"), filters, kernel, /*with_bias=*/false);
}

Var SpeechDecoder::decode(Graph& g, Var features, int num_samples) const {
  Var frames = proj_(g, ops::permute(features, {1, 0}));
  return ops::overlap_add(frames, stride_, num_samples);
}

VisualEncoder::VisualEncoder(const nn::Builder& b, std::array<int, 3> channels, int out_dim) {
  const std::array<int, 5> ch{1, channels[0], channels[1], channels[2], out_dim};
  for (int i = 0; i < 4; ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(ch[i] * 9));
    const auto s = b.scope("conv" + std::to_string(i));
    weights_[i] = &s.uniform("weight", {ch[i + 1], ch[i], 3, 3}, bound);
    biases_[i] = &s.uniform("bias", {ch[i + 1]}, bound);
  }
}

Var VisualEncoder::encode(Graph& g, Var frames) const {
  const Shape& s = frames.shape();
  if (s.size() != 3 || s[1] != kFrameSize || s[2] != kFrameSize)
    throw std::invalid_argument("visual encoder expects (T, 88, 88) frames, got " + shape_str(s));
  const int t_v = s[0];
  Var x = ops::reshape(frames, {t_v, 1, kFrameSize, kFrameSize});
  for (int i = 0; i < 4; ++i)
    x = ops::relu(ops::conv2d(x, g.param(*weights_[i]), g.param(*biases_[i]), 2, 1));
  const int ch = x.dim(1), area = x.dim(2) * x.dim(3);
  Var pooled = ops::mean_axis(ops::reshape(x, {t_v, ch, area}), 2);
  return ops::permute(pooled, {1, 0});
}

Var chunk_features(Var f, int chunk) {
  chunk_count(f.dim(1), chunk);
  return ops::chunk(f, chunk, chunk / 2);
}

Var dechunk_features(Var chunks, int chunk) { return ops::dechunk(chunks, chunk / 2); }

Var apply_mask(Var features, Var mask) {
  if (features.shape() != mask.shape())
    throw std::invalid_argument("mask shape " + shape_str(mask.shape()) +
                                " does not match features " + shape_str(features.shape()));
  return ops::mul(features, mask);
}

}  // namespace cuesep
