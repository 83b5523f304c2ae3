// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cuesep/types.hpp"

namespace cuesep {

// Per-speaker constants of the synthetic voice and face.
struct VoiceProfile {
  double f0_hz = 0.0;
  std::array<double, 3> harmonic_gains{};  // sums to 0.9
  double lip_half_width = 0.0;            // pixels
};

// f0 runs linearly over 90..250 Hz across the speaker grid.
VoiceProfile voice_profile(int speaker_id, int num_speakers);

// Harmonic voice with a slow random loudness envelope, plus a lip video whose
// mouth opening follows that envelope at 25 fps. Pure in (seed, duration,
// speaker_id, num_speakers).
std::pair<Waveform, FrameSeq> synth_av_pair(std::uint64_t seed, double duration_s,
                                            int speaker_id, int num_speakers = 16);

double mean_power(std::span<const double> x);

// Gain applied to the interferer so that target/interferer power is snr_db.
double snr_gain(const Waveform& target, const Waveform& interferer, double snr_db);
Waveform mix_at_snr(const Waveform& target, const Waveform& interferer, double snr_db);

struct MixtureSample {
  int sample_id = 0;
  Waveform mixture;
  Waveform target;
  Waveform interferer;  // already scaled; mixture = target + interferer
  FrameSeq video;
  double snr_db = 0.0;
  int speaker_id = 0;
  int interferer_id = 0;
};

// Everything needed to regenerate a sample; one JSON object per manifest line.
struct SampleDescriptor {
  int sample_id = 0;
  std::uint64_t target_seed = 0;
  std::uint64_t interferer_seed = 0;
  int target_speaker = 0;
  int interferer_speaker = 0;
  int num_speakers = 16;
  double duration_s = 2.0;
  double snr_db = 0.0;
};

MixtureSample realize(const SampleDescriptor& d);

struct CorpusSpec {
  int num_samples = 8;
  int num_speakers = 16;
  double duration_s = 2.0;
  double snr_min_db = -5.0;
  double snr_max_db = 5.0;
  std::uint64_t seed = 0;
};

// Target and interferer speakers differ; SNR is uniform in [min, max].
std::vector<SampleDescriptor> describe_corpus(const CorpusSpec& spec);
std::vector<MixtureSample> synth_corpus(const CorpusSpec& spec);

void write_manifest(std::ostream& os, const std::vector<SampleDescriptor>& ds);
std::vector<SampleDescriptor> read_manifest(std::istream& is);

// 16-bit PCM mono WAV.
void write_wav(const std::string& path, const Waveform& w);
Waveform read_wav(const std::string& path);

}  // namespace cuesep
