// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/degradation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cuesep {

std::string to_string(DegradationKind k) {
  switch (k) {
    case DegradationKind::kGaussianBlur: return "gb";
    case DegradationKind::kConcealment: return "cc";
    case DegradationKind::kMaskedFeature: return "mf";
    case DegradationKind::kFaceMissing: return "fm";
  }
  return "?";
}

DegradationKind parse_degradation(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "gb") return DegradationKind::kGaussianBlur;
  if (s == "cc") return DegradationKind::kConcealment;
  if (s == "mf") return DegradationKind::kMaskedFeature;
  if (s == "fm") return DegradationKind::kFaceMissing;
  throw std::invalid_argument("unknown degradation kind: " + name);
}

bool acts_on_features(DegradationKind k) { return k == DegradationKind::kMaskedFeature; }

int FrameMask::count() const { return static_cast<int>(std::count(flags.begin(), flags.end(), true)); }

FrameMask sample_mask_blocks(int t_v, double proportion, int block_len, std::uint64_t seed) {
  require(t_v >= 0, "mask: negative frame count");
  require(proportion >= 0.0 && proportion <= 1.0, "mask: proportion must lie in [0, 1]");
  require(block_len >= 1, "mask: block_len must be >= 1");
  FrameMask m;
  m.flags.assign(static_cast<std::size_t>(t_v), false);
  m.block_len = block_len;
  m.proportion = proportion;
  const int target = static_cast<int>(std::lround(proportion * t_v));
  if (target == 0) return m;
  if (target > t_v) throw std::runtime_error("mask overflow");

  const int blocks = (target + block_len - 1) / block_len;
  std::vector<int> lens(static_cast<std::size_t>(blocks), block_len);
  std::mt19937_64 rng(seed);
  if (target % block_len != 0) {
    std::uniform_int_distribution<int> which(0, blocks - 1);
    lens[which(rng)] = target - (blocks - 1) * block_len;
  }
  // Stars and bars: spread the free frames over the blocks + 1 gaps.
  const int free_frames = t_v - target;
  std::vector<int> cut(static_cast<std::size_t>(blocks));
  std::uniform_int_distribution<int> pos(0, free_frames);
  for (auto& c : cut) c = pos(rng);
  std::sort(cut.begin(), cut.end());
  int consumed = 0;
  for (int b = 0; b < blocks; ++b) {
    const int start = cut[b] + consumed;
    m.block_starts.push_back(start);
    m.block_lens.push_back(lens[b]);
    for (int i = 0; i < lens[b]; ++i) m.flags[start + i] = true;
    consumed += lens[b];
  }
  return m;
}

DegradationSpec make_degradation(DegradationKind kind, int t_v, double proportion,
                                 std::uint64_t seed, int block_len) {
  DegradationSpec s;
  s.kind = kind;
  s.mask = sample_mask_blocks(t_v, proportion, block_len, seed);
  return s;
}

std::vector<double> gaussian_taps(int size, double sigma) {
  require(size % 2 == 1 && sigma > 0.0, "gaussian kernel needs odd size and sigma > 0");
  std::vector<double> taps(static_cast<std::size_t>(size));
  const int half = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    taps[i] = std::exp(-0.5 * std::pow((i - half) / sigma, 2));
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

namespace {

int reflect(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

void blur_frame(double* img, int h, int w, const std::vector<double>& taps) {
  const int half = static_cast<int>(taps.size()) / 2;
  std::vector<double> tmp(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) acc += taps[k + half] * img[y * w + reflect(x + k, w)];
      tmp[y * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) acc += taps[k + half] * tmp[reflect(y + k, h) * w + x];
      img[y * w + x] = acc;
    }
}

void check_mask(const FrameMask& m, int t_v) {
  require(m.num_frames() == t_v, "degradation mask length " + std::to_string(m.num_frames()) +
                                     " does not match " + std::to_string(t_v) + " frames");
}

}  // namespace

FrameSeq degrade(const FrameSeq& video, const DegradationSpec& spec, std::uint64_t seed) {
  if (acts_on_features(spec.kind))
    throw std::invalid_argument("wrong degradation stage: " + to_string(spec.kind) +
                                " applies to visual features, not pixels");
  const int t_v = video.num_frames();
  check_mask(spec.mask, t_v);
  FrameSeq out = video;
  if (t_v == 0) return out;
  const int h = video.frames.dim(1), w = video.frames.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const auto& p = spec.params;

  switch (spec.kind) {
    case DegradationKind::kFaceMissing:
      for (int t = 0; t < t_v; ++t)
        if (spec.mask.flags[t]) std::fill_n(out.frames.data() + t * plane, plane, 0.0);
      break;
    case DegradationKind::kGaussianBlur: {
      const auto taps = gaussian_taps(p.blur_kernel, p.blur_sigma);
      for (int t = 0; t < t_v; ++t)
        if (spec.mask.flags[t]) blur_frame(out.frames.data() + t * plane, h, w, taps);
      break;
    }
    case DegradationKind::kConcealment: {
      // One occluder per masked block, held still for the block's duration.
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<int> side(p.occluder_min, std::min({p.occluder_max, h, w}));
      for (std::size_t b = 0; b < spec.mask.block_starts.size(); ++b) {
        const int start = spec.mask.block_starts[b];
        const int end = std::min(t_v, start + spec.mask.block_lens[b]);
        const int ow = side(rng), oh = side(rng);
        const int x0 = std::uniform_int_distribution<int>(0, w - ow)(rng);
        const int y0 = std::uniform_int_distribution<int>(0, h - oh)(rng);
        for (int t = start; t < end; ++t)
          for (int y = y0; y < y0 + oh; ++y)
            std::fill_n(out.frames.data() + t * plane + y * w + x0, ow, p.occluder_value);
      }
      break;
    }
    case DegradationKind::kMaskedFeature: break;
  }
  return out;
}

VisualFeat degrade(const VisualFeat& feats, const DegradationSpec& spec, std::uint64_t) {
  if (!acts_on_features(spec.kind))
    throw std::invalid_argument("wrong degradation stage: " + to_string(spec.kind) +
                                " applies to pixels, not visual features");
  const int t_v = feats.num_frames();
  check_mask(spec.mask, t_v);
  VisualFeat out = feats;
  const int n = feats.values.dim(0);
  for (int t = 0; t < t_v; ++t)
    if (spec.mask.flags[t])
      for (int c = 0; c < n; ++c) out.values.at(c, t) = 0.0;
  return out;
}

}  // namespace cuesep
