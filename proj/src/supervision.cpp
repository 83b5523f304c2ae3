// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "cuesep/dsp.hpp"
#include "json.hpp"

namespace cuesep {

double estimate_pitch(std::span<const double> x, int sample_rate, const FrameFeatureConfig& cfg) {
  const int n = static_cast<int>(x.size());
  const int min_lag = std::max(1, static_cast<int>(std::floor(sample_rate / cfg.pitch_max_hz)));
  const int max_lag = std::min(n - 2, static_cast<int>(std::ceil(sample_rate / cfg.pitch_min_hz)));
  if (max_lag <= min_lag + 1) return 0.0;

  double energy = 0.0;
  for (double v : x) energy += v * v;
  if (energy < 1e-10) return 0.0;

  // r[lag] for lag in [min_lag - 1, max_lag + 1] so every candidate has both
  // neighbours for peak tests and interpolation.
  const int lo = min_lag - 1, hi = max_lag + 1;
  std::vector<double> r(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (int lag = lo; lag <= hi; ++lag) {
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (int i = 0; i + lag < n; ++i) {
      xy += x[i] * x[i + lag];
      xx += x[i] * x[i];
      yy += x[i + lag] * x[i + lag];
    }
    r[lag - lo] = (xx > 0.0 && yy > 0.0) ? xy / std::sqrt(xx * yy) : 0.0;
  }
  auto at = [&](int lag) { return r[lag - lo]; };

  double best = -1.0;
  for (int lag = min_lag; lag <= max_lag; ++lag) best = std::max(best, at(lag));
  if (best < cfg.voicing_threshold) return 0.0;

  // The shortest lag whose local peak comes close to the global maximum; this
  // avoids picking a multiple of the true period.
  int pick = -1;
  for (int lag = min_lag; lag <= max_lag; ++lag)
    if (at(lag) >= 0.9 * best && at(lag) >= at(lag - 1) && at(lag) >= at(lag + 1)) {
      pick = lag;
      break;
    }
  if (pick < 0) return 0.0;
  const double a = at(pick - 1), b = at(pick), c = at(pick + 1);
  const double denom = a - 2.0 * b + c;
  const double shift = std::abs(denom) > 1e-12 ? 0.5 * (a - c) / denom : 0.0;
  return sample_rate / (pick + std::clamp(shift, -0.5, 0.5));
}

std::vector<double> video_aligned_frame(std::span<const double> x, int t, const FrameFeatureConfig& cfg) {
  const int centre = t * cfg.hop + cfg.hop / 2;
  const int start = centre - cfg.window / 2;
  std::vector<double> frame(static_cast<std::size_t>(cfg.window), 0.0);
  for (int i = 0; i < cfg.window; ++i) {
    const int j = start + i;
    if (j >= 0 && j < static_cast<int>(x.size())) frame[i] = x[j];
  }
  return frame;
}

std::vector<std::vector<double>> mel_filterbank(int n_fft, int sample_rate, int bins) {
  auto hz_to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto mel_to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const int n_bins = n_fft / 2 + 1;
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(bins + 2));
  for (int i = 0; i < bins + 2; ++i) edges[i] = mel_to_hz(top * i / (bins + 1));
  std::vector<std::vector<double>> fb(static_cast<std::size_t>(bins),
                                      std::vector<double>(static_cast<std::size_t>(n_bins), 0.0));
  for (int m = 0; m < bins; ++m)
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      const double up = (f - edges[m]) / (edges[m + 1] - edges[m]);
      const double down = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
      fb[m][k] = std::max(0.0, std::min(up, down));
    }
  return fb;
}

namespace {

std::vector<double> magnitude_spectrum(const std::vector<double>& frame, const std::vector<double>& window) {
  const int n = static_cast<int>(frame.size());
  const auto& basis = dsp::dft_basis(n);
  std::vector<double> mag(static_cast<std::size_t>(basis.bins));
  for (int k = 0; k < basis.bins; ++k) {
    double re = 0.0, im = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = frame[i] * window[i];
      re += v * basis.cos[static_cast<std::size_t>(i) * basis.bins + k];
      im -= v * basis.sin[static_cast<std::size_t>(i) * basis.bins + k];
    }
    mag[k] = std::sqrt(re * re + im * im);
  }
  return mag;
}

// (mel_bins, T_v) log-mel plus the per-frame pitch track.
void log_mel_and_pitch(const Waveform& s, const FrameFeatureConfig& cfg, Tensor& logmel,
                       std::vector<double>* pitch) {
  const int t_v = video_frames_for(s.length());
  if (t_v < 1) throw std::invalid_argument("clip too short for one feature window");
  const auto window = dsp::hann(cfg.window);
  const auto fb = mel_filterbank(cfg.window, s.sample_rate, cfg.mel_bins);
  logmel = Tensor({cfg.mel_bins, t_v});
  if (pitch) pitch->assign(static_cast<std::size_t>(t_v), 0.0);
  for (int t = 0; t < t_v; ++t) {
    const auto frame = video_aligned_frame(s.samples, t, cfg);
    if (pitch) (*pitch)[t] = estimate_pitch(frame, s.sample_rate, cfg);
    const auto mag = magnitude_spectrum(frame, window);
    for (int m = 0; m < cfg.mel_bins; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < mag.size(); ++k) e += fb[m][k] * mag[k];
      logmel.at(m, t) = std::log(std::max(e, cfg.log_floor));
    }
  }
}

}  // namespace

FrameFeatures acoustic_features(const Waveform& s, const FrameFeatureConfig& cfg) {
  Tensor logmel;
  std::vector<double> pitch;
  log_mel_and_pitch(s, cfg, logmel, &pitch);
  const int t_v = logmel.dim(1);
  FrameFeatures f{Tensor({1 + cfg.mel_bins, t_v}), FeatureKind::kAcoustic};
  for (int t = 0; t < t_v; ++t) {
    f.values.at(0, t) = pitch[t];
    for (int m = 0; m < cfg.mel_bins; ++m) f.values.at(1 + m, t) = logmel.at(m, t);
  }
  return f;
}

FrameFeatures semantic_features(const Waveform& s, const FrameFeatureConfig& cfg) {
  Tensor logmel;
  log_mel_and_pitch(s, cfg, logmel, nullptr);
  const int t_v = logmel.dim(1), ctx = cfg.context, bins = cfg.mel_bins;
  FrameFeatures f{Tensor({(2 * ctx + 1) * bins, t_v}), FeatureKind::kSemantic};
  for (int t = 0; t < t_v; ++t)
    for (int o = -ctx; o <= ctx; ++o) {
      const int src = std::clamp(t + o, 0, t_v - 1);
      for (int m = 0; m < bins; ++m) f.values.at((o + ctx) * bins + m, t) = logmel.at(m, src);
    }
  return f;
}

FrameFeatures extract_frame_feats(const Waveform& s, FeatureKind kind, const FrameFeatureConfig& cfg) {
  return kind == FeatureKind::kAcoustic ? acoustic_features(s, cfg) : semantic_features(s, cfg);
}

namespace {
double sq_dist(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}
}  // namespace

Codebook fit_kmeans(const Tensor& points, int clusters, std::uint64_t seed, KMeansOptions opts) {
  require(points.rank() == 2, "fit_kmeans: points must be (P, D)");
  const int n = points.dim(0), d = points.dim(1);
  require(clusters >= 1, "fit_kmeans: need at least one cluster");
  if (n < clusters)
    throw std::invalid_argument("fit_kmeans: " + std::to_string(n) + " points for " +
                                std::to_string(clusters) + " clusters");
  std::mt19937_64 rng(seed);
  Codebook cb;
  cb.seed = seed;
  cb.centroids = Tensor({clusters, d});
  const double* p = points.data();
  auto row = [&](int i) { return p + static_cast<std::size_t>(i) * d; };

  // k-means++ seeding.
  std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  int first = std::uniform_int_distribution<int>(0, n - 1)(rng);
  std::copy_n(row(first), d, cb.centroids.data());
  for (int c = 1; c < clusters; ++c) {
    const double* prev = cb.centroids.data() + static_cast<std::size_t>(c - 1) * d;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(row(i), prev, d));
      total += nearest[i];
    }
    int pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        u -= nearest[i];
        if (u < 0.0 && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::uniform_int_distribution<int>(0, n - 1)(rng);
    }
    std::copy_n(row(pick), d, cb.centroids.data() + static_cast<std::size_t>(c) * d);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iters; ++it) {
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < clusters; ++c) {
        const double dist = sq_dist(row(i), cb.centroids.data() + static_cast<std::size_t>(c) * d, d);
        if (dist < best) best = dist, assign[i] = c;
      }
      inertia += best;
    }
    cb.inertia_trace.push_back(inertia);
    Tensor sums({clusters, d});
    std::vector<int> counts(static_cast<std::size_t>(clusters), 0);
    for (int i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (int j = 0; j < d; ++j) sums.at(assign[i], j) += row(i)[j];
    }
    for (int c = 0; c < clusters; ++c)
      if (counts[c] > 0)  // empty clusters keep their centroid
        for (int j = 0; j < d; ++j) cb.centroids.at(c, j) = sums.at(c, j) / counts[c];
    const bool converged = std::isfinite(prev_inertia) &&
                            (prev_inertia - inertia) <= opts.rel_tol * std::max(prev_inertia, 1e-300);
    prev_inertia = inertia;
    if (converged) break;
  }
  return cb;
}

std::vector<int> tokenize(const FrameFeatures& f, const Codebook& cb) {
  if (f.dim() != cb.dim())
    throw std::invalid_argument("tokenize: feature dim " + std::to_string(f.dim()) +
                                " != codebook dim " + std::to_string(cb.dim()));
  const int t_v = f.num_frames(), d = f.dim();
  std::vector<int> tokens(static_cast<std::size_t>(t_v), 0);
  std::vector<double> col(static_cast<std::size_t>(d));
  for (int t = 0; t < t_v; ++t) {
    for (int j = 0; j < d; ++j) col[j] = f.values.at(j, t);
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < cb.clusters(); ++c) {
      const double dist = sq_dist(col.data(), cb.centroids.data() + static_cast<std::size_t>(c) * d, d);
      if (dist < best) best = dist, tokens[t] = c;
    }
  }
  return tokens;
}

Tensor feature_points(const std::vector<FrameFeatures>& feats) {
  require(!feats.empty(), "feature_points: no features");
  const int d = feats[0].dim();
  int total = 0;
  for (const auto& f : feats) {
    require(f.dim() == d, "feature_points: mixed feature dims");
    total += f.num_frames();
  }
  Tensor pts({total, d});
  int r = 0;
  for (const auto& f : feats)
    for (int t = 0; t < f.num_frames(); ++t, ++r)
      for (int j = 0; j < d; ++j) pts.at(r, j) = f.values.at(j, t);
  return pts;
}

void save_codebook(std::ostream& os, const Codebook& cb) {
  nlohmann::json j = {{"clusters", cb.clusters()},
                      {"dim", cb.dim()},
                      {"seed", cb.seed},
                      {"centroids", cb.centroids.storage()}};
  os << j.dump() << '\n';
}

Codebook load_codebook(std::istream& is) {
  nlohmann::json j;
  is >> j;
  Codebook cb;
  const int k = j.at("clusters").get<int>(), d = j.at("dim").get<int>();
  cb.seed = j.at("seed").get<std::uint64_t>();
  cb.centroids = Tensor({k, d}, j.at("centroids").get<std::vector<double>>());
  return cb;
}

}  // namespace cuesep
