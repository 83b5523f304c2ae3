// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include "json.hpp"
#include <numbers>
#include <random>
#include <stdexcept>

namespace cuesep {
namespace {

double frac(double x) { return x - std::floor(x); }

// Smooth loudness contour: random knots every 100 ms (a quarter of them
// silent), cosine-interpolated to the sample rate.
std::vector<double> loudness_envelope(std::mt19937_64& rng, int len) {
  constexpr int kKnotSpacing = kSampleRate / 10;
  const int knots = len / kKnotSpacing + 2;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> k(static_cast<std::size_t>(knots));
  for (auto& v : k) v = u(rng) < 0.25 ? 0.0 : 0.3 + 0.7 * u(rng);
  std::vector<double> env(static_cast<std::size_t>(len));
  for (int n = 0; n < len; ++n) {
    const int i = n / kKnotSpacing;
    const double x = static_cast<double>(n % kKnotSpacing) / kKnotSpacing;
    const double w = 0.5 - 0.5 * std::cos(std::numbers::pi * x);
    env[n] = (1.0 - w) * k[i] + w * k[i + 1];
  }
  return env;
}

}  // namespace

VoiceProfile voice_profile(int speaker_id, int num_speakers) {
  require(num_speakers >= 2, "voice_profile: need at least two speakers");
  require(speaker_id >= 0 && speaker_id < num_speakers, "speaker id out of range");
  VoiceProfile p;
  p.f0_hz = 90.0 + 160.0 * speaker_id / (num_speakers - 1);
  double sum = 0.0;
  for (int h = 0; h < 3; ++h) {
    p.harmonic_gains[h] = 0.35 + 0.65 * frac(0.618034 * (speaker_id + 1) * (h + 1) + 0.13 * h);
    sum += p.harmonic_gains[h];
  }
  for (auto& gain : p.harmonic_gains) gain *= 0.9 / sum;
  const int shuffled = (speaker_id * 7) % num_speakers;
  p.lip_half_width = 16.0 + 10.0 * shuffled / (num_speakers - 1);
  return p;
}

std::pair<Waveform, FrameSeq> synth_av_pair(std::uint64_t seed, double duration_s,
                                            int speaker_id, int num_speakers) {
  require(duration_s > 0.0, "synth_av_pair: duration must be positive");
  const VoiceProfile prof = voice_profile(speaker_id, num_speakers);
  std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(speaker_id)};
  std::mt19937_64 rng(sseq);

  const int len = static_cast<int>(std::lround(duration_s * kSampleRate));
  const auto env = loudness_envelope(rng, len);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::array<double, 3> ph{};
  for (auto& p : ph) p = phase(rng);

  Waveform wav;
  wav.samples.resize(static_cast<std::size_t>(len));
  for (int n = 0; n < len; ++n) {
    double s = 0.0;
    for (int h = 0; h < 3; ++h)
      s += prof.harmonic_gains[h] *
           std::sin(2.0 * std::numbers::pi * (h + 1) * prof.f0_hz * n / kSampleRate + ph[h]);
    wav.samples[n] = env[n] * s;
  }

  const int tv = static_cast<int>(std::lround(duration_s * kVideoFps));
  FrameSeq video;
  video.frames = Tensor({tv, kFrameSize, kFrameSize});
  constexpr double kFace = 0.6, kMouth = 0.05;
  const double cx = 43.5, cy = 52.0;
  for (int t = 0; t < tv; ++t) {
    const int centre = std::min(len - 1, t * kSamplesPerVideoFrame + kSamplesPerVideoFrame / 2);
    const double opening = 1.0 + 17.0 * env[centre];
    for (int y = 0; y < kFrameSize; ++y)
      for (int x = 0; x < kFrameSize; ++x) {
        const double dx = (x - cx) / prof.lip_half_width;
        const double dy = (y - cy) / opening;
        video.frames.at(t, y, x) = dx * dx + dy * dy <= 1.0 ? kMouth : kFace;
      }
  }
  return {std::move(wav), std::move(video)};
}

double mean_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double p = 0.0;
  for (double v : x) p += v * v;
  return p / static_cast<double>(x.size());
}

double snr_gain(const Waveform& target, const Waveform& interferer, double snr_db) {
  require(target.length() == interferer.length(), "mix_at_snr: length mismatch");
  const double pi = mean_power(interferer.samples);
  if (pi <= 0.0) throw std::invalid_argument("degenerate interferer");
  const double pt = mean_power(target.samples);
  return std::sqrt(pt / (pi * std::pow(10.0, snr_db / 10.0)));
}

Waveform mix_at_snr(const Waveform& target, const Waveform& interferer, double snr_db) {
  const double g = snr_gain(target, interferer, snr_db);
  Waveform out = target;
  for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += g * interferer.samples[i];
  return out;
}

MixtureSample realize(const SampleDescriptor& d) {
  auto [target, video] = synth_av_pair(d.target_seed, d.duration_s, d.target_speaker, d.num_speakers);
  auto [interf, unused] =
      synth_av_pair(d.interferer_seed, d.duration_s, d.interferer_speaker, d.num_speakers);
  MixtureSample s;
  s.sample_id = d.sample_id;
  const double g = snr_gain(target, interf, d.snr_db);
  for (auto& v : interf.samples) v *= g;
  s.mixture = target;
  for (std::size_t i = 0; i < s.mixture.samples.size(); ++i)
    s.mixture.samples[i] += interf.samples[i];
  s.target = std::move(target);
  s.interferer = std::move(interf);
  s.video = std::move(video);
  s.snr_db = d.snr_db;
  s.speaker_id = d.target_speaker;
  s.interferer_id = d.interferer_speaker;
  return s;
}

std::vector<SampleDescriptor> describe_corpus(const CorpusSpec& spec) {
  require(spec.num_speakers >= 2, "corpus needs at least two speakers");
  require(spec.snr_min_db <= spec.snr_max_db, "corpus SNR range is empty");
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> spk(0, spec.num_speakers - 1);
  std::uniform_int_distribution<int> other(0, spec.num_speakers - 2);
  std::uniform_real_distribution<double> snr(spec.snr_min_db, spec.snr_max_db);
  std::vector<SampleDescriptor> out;
  for (int i = 0; i < spec.num_samples; ++i) {
    SampleDescriptor d;
    d.sample_id = i;
    d.num_speakers = spec.num_speakers;
    d.duration_s = spec.duration_s;
    d.target_speaker = spk(rng);
    d.interferer_speaker = other(rng);
    if (d.interferer_speaker >= d.target_speaker) ++d.interferer_speaker;
    d.target_seed = rng();
    d.interferer_seed = rng();
    d.snr_db = snr(rng);
    out.push_back(d);
  }
  return out;
}

std::vector<MixtureSample> synth_corpus(const CorpusSpec& spec) {
  std::vector<MixtureSample> out;
  for (const auto& d : describe_corpus(spec)) out.push_back(realize(d));
  return out;
}

void write_manifest(std::ostream& os, const std::vector<SampleDescriptor>& ds) {
  for (const auto& d : ds) {
    nlohmann::json j = {{"sample_id", d.sample_id},
                        {"target_seed", d.target_seed},
                        {"interferer_seed", d.interferer_seed},
                        {"target_speaker", d.target_speaker},
                        {"interferer_speaker", d.interferer_speaker},
                        {"num_speakers", d.num_speakers},
                        {"duration_s", d.duration_s},
                        {"snr_db", d.snr_db}};
    os << j.dump() << '\n';
  }
}

std::vector<SampleDescriptor> read_manifest(std::istream& is) {
  std::vector<SampleDescriptor> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line);
    SampleDescriptor d;
    d.sample_id = j.at("sample_id").get<int>();
    d.target_seed = j.at("target_seed").get<std::uint64_t>();
    d.interferer_seed = j.at("interferer_seed").get<std::uint64_t>();
    d.target_speaker = j.at("target_speaker").get<int>();
    d.interferer_speaker = j.at("interferer_speaker").get<int>();
    d.num_speakers = j.at("num_speakers").get<int>();
    d.duration_s = j.at("duration_s").get<double>();
    d.snr_db = j.at("snr_db").get<double>();
    out.push_back(d);
  }
  return out;
}

namespace {
void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::ostream& os, std::uint16_t v) {
  os.put(static_cast<char>(v & 0xff));
  os.put(static_cast<char>(v >> 8));
}
std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
}  // namespace

void write_wav(const std::string& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  put_u32(os, 16);
  put_u16(os, 1);
  put_u16(os, 1);
  put_u32(os, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(os, static_cast<std::uint32_t>(w.sample_rate * 2));
  put_u16(os, 2);
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, data_bytes);
  for (double v : w.samples) {
    const double c = std::clamp(v, -1.0, 1.0);
    const long q = std::clamp(std::lround(c * 32768.0), -32768L, 32767L);
    put_u16(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
}

Waveform read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) || std::memcmp(buf.data() + 8, "WAVE", 4))
    throw std::runtime_error(path + ": not a RIFF/WAVE file");
  Waveform w;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::uint32_t size = get_u32(&buf[pos + 4]);
    const unsigned char* body = &buf[pos + 8];
    if (pos + 8 + size > buf.size()) throw std::runtime_error(path + ": truncated chunk");
    if (!std::memcmp(&buf[pos], "fmt ", 4)) {
      if (get_u16(body) != 1 || get_u16(body + 2) != 1 || get_u16(body + 14) != 16)
        throw std::runtime_error(path + ": only 16-bit PCM mono is supported");
      w.sample_rate = static_cast<int>(get_u32(body + 4));
      have_fmt = true;
    } else if (!std::memcmp(&buf[pos], "data", 4)) {
      if (!have_fmt) throw std::runtime_error(path + ": data before fmt chunk");
      w.samples.resize(size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i)
        w.samples[i] = static_cast<std::int16_t>(get_u16(body + 2 * i)) / 32768.0;
      return w;
    }
    pos += 8 + size + (size & 1);
  }
  throw std::runtime_error(path + ": no data chunk");
}

}  // namespace cuesep
