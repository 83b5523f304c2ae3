// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <span>
#include <utility>
#include <vector>

#include "cuesep/autograd.hpp"

namespace cuesep {

struct LossWeights {
  double sisnr = 1.0;
  double stft = 0.5;
  double speaker = 0.1;
  double acoustic = 0.1;
  double semantic = 0.1;
};

struct StftConfig {
  std::vector<std::pair<int, int>> resolutions{{960, 640}, {640, 320}, {320, 160}};
};

// Plain-value versions of the training losses.
double si_snr(std::span<const double> est, std::span<const double> ref);
double stft_mag_loss(std::span<const double> est, std::span<const double> ref,
                     const StftConfig& cfg = {});
double ce_token_loss(const Tensor& logits, const std::vector<int>& tokens);

// Graph-level multi-resolution STFT loss.
Var stft_mag_loss(Var est, const Tensor& ref, const StftConfig& cfg);

// Inputs for the combined objective. Invalid logits mean the head is off.
struct LossInputs {
  Var estimate;
  const Tensor* reference = nullptr;
  Var speaker_logits;
  int speaker_id = -1;
  Var acoustic_logits;
  const std::vector<int>* acoustic_tokens = nullptr;
  Var semantic_logits;
  const std::vector<int>* semantic_tokens = nullptr;
};

struct LossBreakdown {
  Var total;
  // Unweighted term values; 0 for terms that were left out.
  double sisnr = 0.0;  // SI-SNR in dB (the objective uses its negation)
  double stft = 0.0;
  double speaker = 0.0;
  double acoustic = 0.0;
  double semantic = 0.0;
};

// w_sisnr * (-si_snr) + w_stft * stft + w_spk * CE_spk + w_a * CE_a + w_w * CE_w.
// Terms with zero weight or a disabled head are never added to the graph.
LossBreakdown total_loss(const LossInputs& in, const LossWeights& w,
                         const StftConfig& stft = {});

}  // namespace cuesep
