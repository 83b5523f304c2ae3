// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/dsp.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace cuesep::dsp {

std::vector<double> hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

const DftBasis& dft_basis(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<DftBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    auto b = std::make_unique<DftBasis>();
    b->n = n;
    b->bins = n / 2 + 1;
    b->cos.resize(static_cast<std::size_t>(n) * b->bins);
    b->sin.resize(b->cos.size());
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < b->bins; ++k) {
        // Reduce the phase index exactly before the trig call.
        const long long idx = (static_cast<long long>(i) * k) % n;
        const double ph = 2.0 * std::numbers::pi * static_cast<double>(idx) / n;
        b->cos[static_cast<std::size_t>(i) * b->bins + k] = std::cos(ph);
        b->sin[static_cast<std::size_t>(i) * b->bins + k] = std::sin(ph);
      }
    }
    slot = std::move(b);
  }
  return *slot;
}

std::vector<double> reflect_pad(std::span<const double> x, int pad) {
  const int len = static_cast<int>(x.size());
  require(pad < len, "reflect padding needs pad < signal length");
  std::vector<double> out(static_cast<std::size_t>(len + 2 * pad));
  for (int i = 0; i < len + 2 * pad; ++i) {
    int j = i - pad;
    if (j < 0) j = -j;
    if (j >= len) j = 2 * (len - 1) - j;
    out[i] = x[j];
  }
  return out;
}

int centered_num_frames(int len, int hop) { return len / hop + 1; }

Tensor stft_magnitude(std::span<const double> x, int win, int hop) {
  const auto& basis = dft_basis(win);
  const auto w = hann(win);
  const auto padded = reflect_pad(x, win / 2);
  const int frames = centered_num_frames(static_cast<int>(x.size()), hop);
  Tensor mag({frames, basis.bins});
  std::vector<double> buf(static_cast<std::size_t>(win));
  for (int f = 0; f < frames; ++f) {
    for (int n = 0; n < win; ++n) buf[n] = w[n] * padded[f * hop + n];
    for (int k = 0; k < basis.bins; ++k) {
      double re = 0.0, im = 0.0;
      for (int n = 0; n < win; ++n) {
        re += buf[n] * basis.cos[static_cast<std::size_t>(n) * basis.bins + k];
        im -= buf[n] * basis.sin[static_cast<std::size_t>(n) * basis.bins + k];
      }
      mag.at(f, k) = std::sqrt(re * re + im * im);
    }
  }
  return mag;
}

}  // namespace cuesep::dsp
