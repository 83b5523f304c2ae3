// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cuesep/tensor.hpp"

namespace cuesep {

inline constexpr int kSampleRate = 16000;
inline constexpr int kVideoFps = 25;
inline constexpr int kFrameSize = 88;
inline constexpr int kSamplesPerVideoFrame = kSampleRate / kVideoFps;  // 640

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  int length() const { return static_cast<int>(samples.size()); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
  Tensor tensor() const { return Tensor({length()}, samples); }
};

// Grayscale lip frames, (T_v, 88, 88) with values in [0, 1].
struct FrameSeq {
  Tensor frames;
  int fps = kVideoFps;

  int num_frames() const { return frames.empty() ? 0 : frames.dim(0); }
};

// One feature column per video frame, (N, T_v).
struct VisualFeat {
  Tensor values;

  int num_frames() const { return values.dim(1); }
};

// Video frames for a clip of `num_samples` audio samples.
inline int video_frames_for(int num_samples) {
  return static_cast<int>(std::lround(static_cast<double>(num_samples) / kSampleRate * kVideoFps));
}

}  // namespace cuesep
