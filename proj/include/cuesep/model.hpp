// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "cuesep/av_learner.hpp"
#include "cuesep/backend.hpp"
#include "cuesep/cue_interaction.hpp"
#include "cuesep/degradation.hpp"
#include "cuesep/frontends.hpp"

namespace cuesep {

enum class FusionMode { kInteraction, kConcat };

std::string to_string(FusionMode m);
FusionMode parse_fusion(const std::string& s);

struct ModelConfig {
  std::string preset = "fast";
  int feature_dim = 256;  // N
  int width = 128;        // H
  int lstm_hidden = 128;
  int chunk = 64;  // K
  int encoder_kernel = 40;
  int encoder_stride = 20;
  std::array<int, 3> visual_channels{16, 32, 64};
  int num_blocks = 5;
  int num_speakers = 16;
  int acoustic_classes = 512;
  int semantic_classes = 48;
  std::array<bool, kNumCues> cues{true, true, true};
  FusionMode fusion = FusionMode::kInteraction;

  bool any_cue() const { return cues[0] || cues[1] || cues[2]; }
};

// "full" (10 blocks), "fast" (5 blocks) or "toy" (reduced widths, 2 blocks).
ModelConfig preset_config(const std::string& name);

// Parses "spk,acoustic,semantic" (any subset, or "none").
std::array<bool, kNumCues> parse_cues(const std::string& s);
std::string cues_string(const std::array<bool, kNumCues>& cues);

struct ForwardOutput {
  int raw_frames = 0;     // encoder columns before padding
  int padded_frames = 0;  // after padding to whole chunks
  int num_chunks = 0;     // T_v

  Var mixture_features;  // F_a (N, K, T_v)
  Var visual_features;   // F_v (N, T_v), after any feature-stage masking
  LowLevelOutput low;
  HighLevelOutput high;
  Var context;      // R_a (H, K, T_v)
  Var rels;         // (3, H, T_v); zero rows for disabled cues
  Var enhanced;     // (3, H, K, T_v); R_a for disabled cues
  Var psi;          // (3, H, T_v); invalid in concat mode
  Var fused;        // R_e (H, K, T_v)
  Var mask;         // (N, K, T_v)
  Var estimate;     // (L)
};

class CueSepModel {
 public:
  CueSepModel(const ModelConfig& cfg, std::uint64_t seed);
  CueSepModel(const CueSepModel&) = delete;
  CueSepModel& operator=(const CueSepModel&) = delete;

  // `feature_mask` zeroes visual feature columns after the visual encoder.
  ForwardOutput forward(Graph& g, const Waveform& mixture, const FrameSeq& video,
                        const FrameMask* feature_mask = nullptr) const;

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  SpeechEncoder encoder;
  VisualEncoder visual_encoder;
  LowLevelLearner low;
  HighLevelLearner high;
  std::array<CueBranch, kNumCues> branches;  // only enabled cues are built
  AttentionFusion attention;
  ConcatFusion concat;
  Backend backend;
  SpeechDecoder decoder;

 private:
  ModelConfig cfg_;
  ParamStore store_;
  nn::ChannelLinear context_audio_, context_high_;
};

}  // namespace cuesep
