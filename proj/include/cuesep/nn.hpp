// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>

#include "cuesep/autograd.hpp"
#include "cuesep/ops.hpp"

namespace cuesep::nn {

// Registers parameters under a dotted name scope and draws their initial
// values from one shared, seeded generator.
class Builder {
 public:
  Builder(ParamStore& store, std::uint64_t seed);

  Builder scope(const std::string& name) const;
  const std::string& prefix() const { return prefix_; }
  ParamStore& store() const { return *store_; }

  Parameter& uniform(const std::string& name, Shape shape, double bound) const;
  Parameter& constant(const std::string& name, Shape shape, double value) const;

 private:
  Builder(ParamStore* store, std::shared_ptr<std::mt19937_64> rng, std::string prefix)
      : store_(store), rng_(std::move(rng)), prefix_(std::move(prefix)) {}

  ParamStore* store_;
  std::shared_ptr<std::mt19937_64> rng_;
  std::string prefix_;
};

// Pointwise projection over dim 0 of a channel-first tensor.
struct ChannelLinear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  ChannelLinear() = default;
  ChannelLinear(const Builder& b, int in, int out, bool with_bias = true);
  Var operator()(Graph& g, Var x) const;
  void zero();
};

// Projection over the last dim.
struct Dense {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  Dense() = default;
  Dense(const Builder& b, int in, int out, bool with_bias = true);
  Var operator()(Graph& g, Var x) const;
};

// Convolution along time of a (C, T) tensor with "same" zero padding.
struct TimeConv {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
  int dilation = 1;

  TimeConv() = default;
  TimeConv(const Builder& b, int in, int out, int kernel, int dilation = 1,
           bool with_bias = true);
  Var operator()(Graph& g, Var x) const;
  void zero();
};

struct PRelu {
  Parameter* alpha = nullptr;

  PRelu() = default;
  explicit PRelu(const Builder& b);
  Var operator()(Graph& g, Var x) const;
};

// Normalization over every element with per-channel affine (one group).
struct GlobalNorm {
  Parameter* gamma = nullptr;
  Parameter* beta = nullptr;

  GlobalNorm() = default;
  GlobalNorm(const Builder& b, int channels);
  Var operator()(Graph& g, Var x) const;
};

// Per-frame layer normalization over channels of a (C, T) tensor.
struct FrameNorm {
  Parameter* gamma = nullptr;
  Parameter* beta = nullptr;

  FrameNorm() = default;
  FrameNorm(const Builder& b, int channels);
  Var operator()(Graph& g, Var x) const;
};

// Bidirectional LSTM over x (B, L, I) -> (B, L, 2H), forward half first.
struct BiLstm {
  Parameter* fw_ih = nullptr;
  Parameter* fw_hh = nullptr;
  Parameter* fw_b = nullptr;
  Parameter* bw_ih = nullptr;
  Parameter* bw_hh = nullptr;
  Parameter* bw_b = nullptr;

  BiLstm() = default;
  BiLstm(const Builder& b, int in, int hidden);
  Var operator()(Graph& g, Var x) const;
};

}  // namespace cuesep::nn
