// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/objectives.hpp"

#include <stdexcept>

#include "cuesep/ops.hpp"

namespace cuesep {

namespace {
Tensor as_tensor(std::span<const double> x) {
  return Tensor({static_cast<int>(x.size())}, std::vector<double>(x.begin(), x.end()));
}
}  // namespace

double si_snr(std::span<const double> est, std::span<const double> ref) {
  Graph g(false);
  return ops::si_snr(g.constant(as_tensor(est)), as_tensor(ref)).value()[0];
}

double stft_mag_loss(std::span<const double> est, std::span<const double> ref, const StftConfig& cfg) {
  Graph g(false);
  return stft_mag_loss(g.constant(as_tensor(est)), as_tensor(ref), cfg).value()[0];
}

Var stft_mag_loss(Var est, const Tensor& ref, const StftConfig& cfg) {
  require(!cfg.resolutions.empty(), "stft_mag_loss: no resolutions");
  Var sum;
  for (auto [win, hop] : cfg.resolutions) {
    Var term = ops::stft_mag_l1(est, ref, win, hop);
    sum = sum.valid() ? ops::add(sum, term) : term;
  }
  return sum;
}

double ce_token_loss(const Tensor& logits, const std::vector<int>& tokens) {
  Graph g(false);
  return ops::cross_entropy(g.constant(logits), tokens).value()[0];
}

LossBreakdown total_loss(const LossInputs& in, const LossWeights& w, const StftConfig& stft) {
  require(in.estimate.valid() && in.reference, "total_loss: missing estimate or reference");
  for (double v : {w.sisnr, w.stft, w.speaker, w.acoustic, w.semantic})
    if (v < 0.0) throw std::invalid_argument("total_loss: negative loss weight");
  LossBreakdown out;
  std::vector<Var> terms;
  auto add_term = [&](Var v, double weight, double& slot, double sign = 1.0) {
    slot = v.value()[0];
    terms.push_back(ops::scale(v, sign * weight));
  };
  if (w.sisnr > 0.0) add_term(ops::si_snr(in.estimate, *in.reference), w.sisnr, out.sisnr, -1.0);
  if (w.stft > 0.0) add_term(stft_mag_loss(in.estimate, *in.reference, stft), w.stft, out.stft);
  if (w.speaker > 0.0 && in.speaker_logits.valid())
    add_term(ops::cross_entropy(in.speaker_logits, {in.speaker_id}), w.speaker, out.speaker);
  if (w.acoustic > 0.0 && in.acoustic_logits.valid() && in.acoustic_tokens)
    add_term(ops::cross_entropy(in.acoustic_logits, *in.acoustic_tokens), w.acoustic, out.acoustic);
  if (w.semantic > 0.0 && in.semantic_logits.valid() && in.semantic_tokens)
    add_term(ops::cross_entropy(in.semantic_logits, *in.semantic_tokens), w.semantic, out.semantic);
  if (terms.empty()) throw std::invalid_argument("total_loss: every loss weight is zero");
  Var total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = ops::add(total, terms[i]);
  out.total = total;
  return out;
}

}  // namespace cuesep
