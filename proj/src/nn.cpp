// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/nn.hpp"

#include <cmath>

namespace cuesep::nn {

Builder::Builder(ParamStore& store, std::uint64_t seed)
    : store_(&store), rng_(std::make_shared<std::mt19937_64>(seed)) {}

Builder Builder::scope(const std::string& name) const {
  return Builder(store_, rng_, prefix_.empty() ? name : prefix_ + "." + name);
}

Parameter& Builder::uniform(const std::string& name, Shape shape, double bound) const {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values()) v = dist(*rng_);
  return store_->add(prefix_.empty() ? name : prefix_ + "." + name, std::move(t));
}

Parameter& Builder::constant(const std::string& name, Shape shape, double value) const {
  return store_->add(prefix_.empty() ? name : prefix_ + "." + name,
                     Tensor(std::move(shape), value));
}

namespace {
Var maybe(Graph& g, Parameter* p) { return p ? g.param(*p) : Var(); }
}  // namespace

ChannelLinear::ChannelLinear(const Builder& b, int in, int out, bool with_bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = &b.uniform("weight", {out, in}, bound);
  if (with_bias) bias = &b.uniform("bias", {out}, bound);
}

Var ChannelLinear::operator()(Graph& g, Var x) const {
  return ops::channel_linear(x, g.param(*weight), maybe(g, bias));
}

void ChannelLinear::zero() {
  weight->value.fill(0.0);
  if (bias) bias->value.fill(0.0);
}

Dense::Dense(const Builder& b, int in, int out, bool with_bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = &b.uniform("weight", {out, in}, bound);
  if (with_bias) bias = &b.uniform("bias", {out}, bound);
}

Var Dense::operator()(Graph& g, Var x) const {
  return ops::linear_last(x, g.param(*weight), maybe(g, bias));
}

TimeConv::TimeConv(const Builder& b, int in, int out, int kernel, int dil, bool with_bias)
    : dilation(dil) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel));
  weight = &b.uniform("weight", {out, in, kernel}, bound);
  if (with_bias) bias = &b.uniform("bias", {out}, bound);
}

Var TimeConv::operator()(Graph& g, Var x) const {
  return ops::conv1d(x, g.param(*weight), maybe(g, bias), dilation);
}

void TimeConv::zero() {
  weight->value.fill(0.0);
  if (bias) bias->value.fill(0.0);
}

PRelu::PRelu(const Builder& b) { alpha = &b.constant("alpha", {1}, 0.25); }

Var PRelu::operator()(Graph& g, Var x) const { return ops::prelu(x, g.param(*alpha)); }

GlobalNorm::GlobalNorm(const Builder& b, int channels) {
  gamma = &b.constant("gamma", {channels}, 1.0);
  beta = &b.constant("beta", {channels}, 0.0);
}

Var GlobalNorm::operator()(Graph& g, Var x) const {
  return ops::global_norm(x, g.param(*gamma), g.param(*beta));
}

FrameNorm::FrameNorm(const Builder& b, int channels) {
  gamma = &b.constant("gamma", {channels}, 1.0);
  beta = &b.constant("beta", {channels}, 0.0);
}

Var FrameNorm::operator()(Graph& g, Var x) const {
  return ops::channel_norm(x, g.param(*gamma), g.param(*beta));
}

BiLstm::BiLstm(const Builder& b, int in, int hidden) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  fw_ih = &b.uniform("fw.w_ih", {4 * hidden, in}, bound);
  fw_hh = &b.uniform("fw.w_hh", {4 * hidden, hidden}, bound);
  fw_b = &b.uniform("fw.bias", {4 * hidden}, bound);
  bw_ih = &b.uniform("bw.w_ih", {4 * hidden, in}, bound);
  bw_hh = &b.uniform("bw.w_hh", {4 * hidden, hidden}, bound);
  bw_b = &b.uniform("bw.bias", {4 * hidden}, bound);
}

Var BiLstm::operator()(Graph& g, Var x) const {
  Var fw = ops::lstm(x, g.param(*fw_ih), g.param(*fw_hh), g.param(*fw_b), false);
  Var bw = ops::lstm(x, g.param(*bw_ih), g.param(*bw_hh), g.param(*bw_b), true);
  return ops::concat({fw, bw}, 2);
}

}  // namespace cuesep::nn
