// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cuesep/types.hpp"

namespace cuesep {

// Gaussian blur, concealment (occluder), masked feature, face missing.
enum class DegradationKind { kGaussianBlur, kConcealment, kMaskedFeature, kFaceMissing };

std::string to_string(DegradationKind k);
// Accepts gb, cc, mf, fm (any case).
DegradationKind parse_degradation(const std::string& name);
// MF acts on encoded visual features; the rest act on pixels.
bool acts_on_features(DegradationKind k);

struct FrameMask {
  std::vector<bool> flags;
  std::vector<int> block_starts;  // sorted
  std::vector<int> block_lens;
  int block_len = 5;
  double proportion = 0.0;

  int num_frames() const { return static_cast<int>(flags.size()); }
  int count() const;
};

// Places ceil(n / block_len) non-overlapping blocks, n = round(p * T_v), with
// one uniformly chosen block truncated when block_len does not divide n.
// Block positions are a uniform draw over all non-overlapping arrangements.
FrameMask sample_mask_blocks(int t_v, double proportion, int block_len, std::uint64_t seed);

struct DegradationParams {
  int blur_kernel = 9;
  double blur_sigma = 3.0;
  int occluder_min = 30;
  int occluder_max = 60;
  double occluder_value = 0.5;
};

struct DegradationSpec {
  DegradationKind kind = DegradationKind::kFaceMissing;
  FrameMask mask;
  DegradationParams params;
};

DegradationSpec make_degradation(DegradationKind kind, int t_v, double proportion,
                                 std::uint64_t seed, int block_len = 5);

// Pixel-stage corruption (GB, CC, FM). Unmasked frames are copied bitwise.
FrameSeq degrade(const FrameSeq& video, const DegradationSpec& spec, std::uint64_t seed);
// Feature-stage corruption (MF): masked columns set to zero.
VisualFeat degrade(const VisualFeat& feats, const DegradationSpec& spec, std::uint64_t seed);

// Normalized 1-D Gaussian taps; the 2-D kernel is their outer product.
std::vector<double> gaussian_taps(int size, double sigma);

}  // namespace cuesep
