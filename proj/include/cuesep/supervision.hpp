// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cuesep/types.hpp"

namespace cuesep {

enum class FeatureKind { kAcoustic, kSemantic };

// (D, T_v): one column per video frame.
struct FrameFeatures {
  Tensor values;
  FeatureKind kind = FeatureKind::kAcoustic;

  int dim() const { return values.dim(0); }
  int num_frames() const { return values.dim(1); }
};

struct FrameFeatureConfig {
  int window = 1024;  // 64 ms
  int hop = kSamplesPerVideoFrame;  // 40 ms
  int mel_bins = 40;
  int context = 2;  // semantic stacking radius
  double pitch_min_hz = 50.0;
  double pitch_max_hz = 400.0;
  double voicing_threshold = 0.3;
  double log_floor = 1e-10;
};

// Normalized-autocorrelation pitch of one frame in Hz; 0 when unvoiced.
double estimate_pitch(std::span<const double> frame, int sample_rate, const FrameFeatureConfig& cfg);

// Window `window` centred on each video frame, zero-padded at the clip edges.
std::vector<double> video_aligned_frame(std::span<const double> x, int t, const FrameFeatureConfig& cfg);

// Triangular mel filterbank (HTK scale) over window/2+1 magnitude bins.
std::vector<std::vector<double>> mel_filterbank(int n_fft, int sample_rate, int bins);

// Acoustic columns: [pitch_hz, log-mel x mel_bins].
FrameFeatures acoustic_features(const Waveform& s, const FrameFeatureConfig& cfg = {});
// Log-mel frames stacked over +-context neighbours (edges replicated).
FrameFeatures semantic_features(const Waveform& s, const FrameFeatureConfig& cfg = {});

// Pluggable source of the semantic token features; pretrained audio-visual
// encoders can be dropped in behind this interface.
class SemanticFeatureExtractor {
 public:
  virtual ~SemanticFeatureExtractor() = default;
  virtual FrameFeatures extract(const Waveform& s) const = 0;
};

class LogMelContextExtractor : public SemanticFeatureExtractor {
 public:
  explicit LogMelContextExtractor(FrameFeatureConfig cfg = {}) : cfg_(cfg) {}
  FrameFeatures extract(const Waveform& s) const override { return semantic_features(s, cfg_); }

 private:
  FrameFeatureConfig cfg_;
};

FrameFeatures extract_frame_feats(const Waveform& s, FeatureKind kind,
                                  const FrameFeatureConfig& cfg = {});

struct Codebook {
  Tensor centroids;  // (clusters, D)
  std::uint64_t seed = 0;
  std::vector<double> inertia_trace;  // per Lloyd iteration

  int clusters() const { return centroids.dim(0); }
  int dim() const { return centroids.dim(1); }
};

struct KMeansOptions {
  int max_iters = 100;
  double rel_tol = 1e-6;
};

// k-means++ seeding then Lloyd iterations; points is (P, D).
Codebook fit_kmeans(const Tensor& points, int clusters, std::uint64_t seed, KMeansOptions opts = {});

// Nearest centroid per column (Euclidean, lowest index on ties).
std::vector<int> tokenize(const FrameFeatures& f, const Codebook& cb);

// Stacks the columns of several feature matrices into (P, D) points.
Tensor feature_points(const std::vector<FrameFeatures>& feats);

void save_codebook(std::ostream& os, const Codebook& cb);
Codebook load_codebook(std::istream& is);

}  // namespace cuesep
