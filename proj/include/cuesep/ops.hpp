// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "cuesep/autograd.hpp"

// Differentiable tensor ops. Every op records its own backward on the graph
// owning its first argument. Channel-first layouts throughout: a "channel"
// op treats dim 0 as channels and flattens the rest.
namespace cuesep::ops {

// Elementwise; shapes must match exactly.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
// alpha holds a single shared slope.
Var prelu(Var a, Var alpha);

Var reshape(Var a, Shape s);
Var permute(Var a, const std::vector<int>& perm);
Var concat(const std::vector<Var>& xs, int axis);
Var slice(Var a, int axis, int start, int len);
// Zero-pads (or truncates) `axis` to `len`, keeping the leading entries.
Var resize_axis(Var a, int axis, int len);

Var mean_axis(Var a, int axis);
Var sum_axis(Var a, int axis);
// Inserts a new axis of size n at position `axis`.
Var broadcast_axis(Var a, int axis, int n);
Var sum_all(Var a);
// sum(a * w) for a constant weight tensor; used by probes and grad checks.
Var dot_const(Var a, const Tensor& w);

// Y[o, m] = sum_i W[o, i] X[i, m] + b[o]; X is (Cin, ...). b may be invalid.
Var channel_linear(Var x, Var w, Var b);
// Y[..., o] = sum_i X[..., i] W[o, i] + b[o].
Var linear_last(Var x, Var w, Var b);
Var matmul(Var a, Var b);
Var transpose(Var a);

// x (Cin, T), w (Cout, Cin, k) with odd k; zero "same" padding.
Var conv1d(Var x, Var w, Var b, int dilation = 1);
// x (C, T), w (C, k); one filter per channel, zero "same" padding.
Var depthwise_conv1d(Var x, Var w, Var b);
// x (B, Cin, H, W), w (Cout, Cin, kh, kw).
Var conv2d(Var x, Var w, Var b, int stride, int pad);

// Normalizes over every element of x; gamma/beta are per channel (dim 0).
Var global_norm(Var x, Var gamma, Var beta, double eps = 1e-8);
// x (C, T): normalizes each column over C.
Var channel_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

// Single-direction LSTM over x (B, L, I); gate order i, f, g, o.
Var lstm(Var x, Var w_ih, Var w_hh, Var bias, bool reverse);

// Softmax along `axis`. Entries whose index along `axis` is disabled get
// probability zero; at least one index must stay enabled.
Var softmax(Var a, int axis, const std::vector<bool>& enabled = {});

// x (L) -> (T_f, win) frames at hop; T_f = floor((L - win) / hop) + 1.
Var frame_signal(Var x, int win, int hop);
// frames (T_f, win) -> (out_len) overlap-added at hop, truncated or padded.
Var overlap_add(Var frames, int hop, int out_len);
// f (C, T_f) -> (C, K, T_v), chunk t = columns [t*hop, t*hop + K).
Var chunk(Var f, int k, int hop);
// Inverse of chunk: overlap-add divided by the per-column cover count.
Var dechunk(Var f, int hop);

// 10 log10 of the scale-invariant signal-to-noise ratio, clamped.
Var si_snr(Var est, const Tensor& ref);
// Mean |  |STFT(est)| - |STFT(ref)|  | at one resolution (Hann, centered).
Var stft_mag_l1(Var est, const Tensor& ref, int win, int hop);
// Mean over columns of -log softmax(logits[:, t])[tokens[t]]; logits (C, T).
Var cross_entropy(Var logits, const std::vector<int>& tokens);

}  // namespace cuesep::ops
