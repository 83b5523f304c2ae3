// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Evaluation sweeps, cue ablations and attention dumps built on the trainer.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cuesep/metrics.hpp"
#include "cuesep/training.hpp"

namespace cuesep {

// Same recipe as the training corpus under a different data seed.
std::vector<MixtureSample> heldout_corpus(const RunConfig& cfg, int num_samples);

const std::vector<double>& sweep_proportions();  // 0, 0.25, 0.5, 0.75, 1

// One report per degradation kind, each covering every proportion.
std::vector<EvalReport> sweep_degradations(const Extractor& ex,
                                           const std::vector<MixtureSample>& data,
                                           const std::vector<DegradationKind>& kinds,
                                           const std::vector<double>& proportions,
                                           std::uint64_t seed);

// Parameter-name prefixes of a cue's classifier head and its fusion branch.
std::vector<std::string> cue_head_prefixes(int cue);

struct AblationVariant {
  std::array<bool, kNumCues> cues{true, true, true};
  FusionMode fusion = FusionMode::kInteraction;

  std::string label() const;
};

// All eight cue subsets with attention fusion, then all cues with concatenation.
std::vector<AblationVariant> ablation_variants();

struct AblationResult {
  AblationVariant variant;
  std::size_t num_params = 0;
  double final_loss = 0.0;
  double train_sisnri = 0.0;
  double eval_sisnri = 0.0;
  // Largest gradient norm seen on any disabled cue's parameters.
  double disabled_grad_norm = 0.0;
};

AblationResult run_ablation_variant(const RunConfig& base, const AblationVariant& v,
                                    const std::vector<MixtureSample>& heldout,
                                    std::ostream* log = nullptr);
void write_ablation_csv(std::ostream& os, const std::vector<AblationResult>& rows);

// psi (3, H, T_v) for one sample, optionally under a degradation.
Tensor attention_trace(const CueSepModel& model, const MixtureSample& sample,
                       const DegradationSpec* degradation = nullptr, std::uint64_t seed = 0);
// Rows t; columns "<cue>_h<h>" for every requested h. Throws if h is out of range.
void write_attention_csv(std::ostream& os, const Tensor& psi, const std::vector<int>& features);

}  // namespace cuesep
