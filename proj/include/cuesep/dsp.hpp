// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <span>
#include <vector>

#include "cuesep/tensor.hpp"

namespace cuesep::dsp {

// Periodic Hann window of length n.
std::vector<double> hann(int n);

// Real-input DFT basis for length n: row-major (n x bins) cosine and sine
// tables, bins = n/2 + 1. Cached per n; safe to call concurrently.
struct DftBasis {
  int n = 0;
  int bins = 0;
  std::vector<double> cos;
  std::vector<double> sin;
};
const DftBasis& dft_basis(int n);

// Reflect padding without repeating the edge sample (numpy "reflect").
std::vector<double> reflect_pad(std::span<const double> x, int pad);
int centered_num_frames(int len, int hop);

// Magnitude spectrogram (frames x bins), Hann window, frames centered with
// reflect padding of win/2.
Tensor stft_magnitude(std::span<const double> x, int win, int hop);

}  // namespace cuesep::dsp
