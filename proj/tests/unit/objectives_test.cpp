// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <complex>
#include <numbers>

#include "cuesep/objectives.hpp"
#include "gradcheck.hpp"

namespace cuesep {
namespace {

using testing::random_tensor;

std::vector<double> randn(int n, std::mt19937_64& rng, double scale = 1.0) {
  return random_tensor({n}, rng, scale).storage();
}

// Projection-based SI-SNR written without any shared code.
double si_snr_oracle(const std::vector<double>& est, const std::vector<double>& ref) {
  long double dot = 0, rr = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) dot += (long double)est[i] * ref[i], rr += (long double)ref[i] * ref[i];
  long double s2 = 0, e2 = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const long double s = dot / rr * ref[i];
    s2 += s * s;
    e2 += (est[i] - s) * (est[i] - s);
  }
  // Same +-100 dB clamp as the library.
  return static_cast<double>(10.0L * std::log10(std::clamp(s2 / e2, 1e-10L, 1e10L)));
}

TEST(SiSnr, HandCaseIsZeroDb) {
  // est = s + n with n orthogonal to s and |n| = |s|.
  std::vector<double> ref{1, 0, 1, 0}, est{1, 1, 1, -1};
  EXPECT_NEAR(si_snr(est, ref), 0.0, 1e-12);
}

TEST(SiSnr, ScaleInvariance) {
  std::mt19937_64 rng(1);
  auto ref = randn(512, rng), est = randn(512, rng);
  for (std::size_t i = 0; i < est.size(); ++i) est[i] += 2.0 * ref[i];
  const double base = si_snr(est, ref);
  for (double c : {0.01, 0.5, 3.0, 1000.0}) {
    auto scaled = est;
    for (auto& v : scaled) v *= c;
    EXPECT_NEAR(si_snr(scaled, ref), base, 1e-9);
  }
}

TEST(SiSnr, MatchesOracleOnRandomPairs) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> len(16, 400);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    auto ref = randn(n, rng), est = randn(n, rng);
    EXPECT_NEAR(si_snr(est, ref), si_snr_oracle(est, ref), 1e-9);
  }
}

TEST(SiSnr, DegenerateReferenceThrows) {
  std::vector<double> zero(64, 0.0), est(64, 1.0);
  EXPECT_THROW(si_snr(est, zero), std::invalid_argument);
}

TEST(SiSnr, Gradient) {
  std::mt19937_64 rng(3);
  Tensor ref = random_tensor({128}, rng);
  auto r = testing::check_gradients(
      [&](Graph&, const std::vector<Var>& x) { return ops::si_snr(x[0], ref); },
      {random_tensor({128}, rng)}, nullptr, 3, 1e-5);
  EXPECT_LT(r.worst(), 1e-6);
}

// Direct-summation magnitude spectrogram: periodic Hann, centered frames,
// numpy-style reflect padding.
std::vector<std::vector<double>> direct_stft(const std::vector<double>& x, int win, int hop) {
  const int n = static_cast<int>(x.size()), pad = win / 2;
  auto sample = [&](int i) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return x[i];
  };
  std::vector<std::vector<double>> mag;
  for (int f = 0; f <= n / hop; ++f) {
    std::vector<double> row;
    for (int k = 0; k <= win / 2; ++k) {
      std::complex<long double> acc = 0;
      for (int j = 0; j < win; ++j) {
        const long double w = 0.5L - 0.5L * std::cos(2.0L * std::numbers::pi_v<long double> * j / win);
        acc += w * sample(f * hop + j - pad) *
               std::polar(1.0L, -2.0L * std::numbers::pi_v<long double> * ((long long)j * k % win) / win);
      }
      row.push_back(static_cast<double>(std::abs(acc)));
    }
    mag.push_back(row);
  }
  return mag;
}

TEST(StftLoss, ZeroForIdenticalAndNegatedSignals) {
  std::mt19937_64 rng(4);
  auto ref = randn(4000, rng);
  auto neg = ref;
  for (auto& v : neg) v = -v;
  EXPECT_EQ(stft_mag_loss(ref, ref), 0.0);
  EXPECT_NEAR(stft_mag_loss(neg, ref), 0.0, 1e-12);
}

TEST(StftLoss, MatchesDirectSummation) {
  std::mt19937_64 rng(5);
  std::vector<double> ref(1000), est = randn(1000, rng, 0.3);
  for (int i = 0; i < 1000; ++i) ref[i] = std::sin(2.0 * std::numbers::pi * 440.0 * i / 16000.0);
  const StftConfig cfg{{{64, 32}, {128, 48}}};
  double expect = 0.0;
  for (auto [win, hop] : cfg.resolutions) {
    auto me = direct_stft(est, win, hop), mr = direct_stft(ref, win, hop);
    double sum = 0.0;
    for (std::size_t f = 0; f < me.size(); ++f)
      for (std::size_t k = 0; k < me[f].size(); ++k) sum += std::abs(me[f][k] - mr[f][k]);
    expect += sum / (me.size() * me[0].size());
  }
  EXPECT_NEAR(stft_mag_loss(est, ref, cfg), expect, 1e-9 * expect);
}

TEST(StftLoss, Gradient) {
  std::mt19937_64 rng(6);
  Tensor ref = random_tensor({200}, rng);
  const StftConfig cfg{{{32, 16}, {64, 24}}};
  auto r = testing::check_gradients(
      [&](Graph&, const std::vector<Var>& x) { return stft_mag_loss(x[0], ref, cfg); },
      {random_tensor({200}, rng)}, nullptr, 6, 1e-6);
  EXPECT_LT(r.worst(), 1e-5);
}

TEST(CrossEntropy, UniformLogitsGiveLogClasses) {
  Tensor logits({48, 7}, 0.3);
  EXPECT_NEAR(ce_token_loss(logits, {0, 5, 47, 12, 12, 3, 9}), std::log(48.0), 1e-12);
}

TEST(CrossEntropy, MatchesLoopOracleAndRejectsBadTokens) {
  std::mt19937_64 rng(7);
  Tensor logits = random_tensor({10, 20}, rng, 4.0);
  std::vector<int> tokens(20);
  std::uniform_int_distribution<int> pick(0, 9);
  for (auto& t : tokens) t = pick(rng);
  double expect = 0.0;
  for (int t = 0; t < 20; ++t) {
    long double z = 0;
    for (int c = 0; c < 10; ++c) z += std::exp((long double)logits.at(c, t));
    expect += static_cast<double>(std::log(z) - logits.at(tokens[t], t));
  }
  EXPECT_NEAR(ce_token_loss(logits, tokens), expect / 20.0, 1e-12);
  tokens[3] = 10;
  EXPECT_THROW(ce_token_loss(logits, tokens), std::out_of_range);
  tokens.pop_back();
  EXPECT_THROW(ce_token_loss(logits, tokens), std::invalid_argument);
}

struct LossFixture {
  Tensor est, ref, spk, ac, se;
  std::vector<int> ac_tok, se_tok;
  LossFixture() {
    std::mt19937_64 rng(8);
    est = random_tensor({1600}, rng);
    ref = random_tensor({1600}, rng);
    spk = random_tensor({4, 1}, rng);
    ac = random_tensor({6, 5}, rng);
    se = random_tensor({6, 5}, rng);
    ac_tok = {0, 1, 2, 3, 4};
    se_tok = {5, 4, 3, 2, 1};
  }
  LossInputs bind(Graph& g, Var* spk_var = nullptr) {
    LossInputs in;
    in.estimate = g.input(est);
    in.reference = &ref;
    in.speaker_logits = g.input(spk);
    if (spk_var) *spk_var = in.speaker_logits;
    in.speaker_id = 2;
    in.acoustic_logits = g.constant(ac);
    in.acoustic_tokens = &ac_tok;
    in.semantic_logits = g.constant(se);
    in.semantic_tokens = &se_tok;
    return in;
  }
};

TEST(TotalLoss, IsWeightedSumOfTerms) {
  LossFixture fx;
  Graph g(false);
  const LossWeights w{1.0, 0.5, 0.1, 0.2, 0.3};
  LossBreakdown b = total_loss(fx.bind(g), w);
  const double expect = -si_snr(fx.est.values(), fx.ref.values()) +
                        0.5 * stft_mag_loss(fx.est.values(), fx.ref.values()) +
                        0.1 * ce_token_loss(fx.spk, {2}) + 0.2 * ce_token_loss(fx.ac, fx.ac_tok) +
                        0.3 * ce_token_loss(fx.se, fx.se_tok);
  EXPECT_NEAR(b.total.value()[0], expect, 1e-12);
  EXPECT_NEAR(b.sisnr, si_snr(fx.est.values(), fx.ref.values()), 1e-12);
  EXPECT_NEAR(b.semantic, ce_token_loss(fx.se, fx.se_tok), 1e-12);
}

TEST(TotalLoss, ZeroWeightTermSendsNoGradient) {
  LossFixture fx;
  Graph g(true);
  Var spk;
  LossWeights w;
  w.speaker = 0.0;
  LossBreakdown b = total_loss(fx.bind(g, &spk), w);
  g.backward(b.total);
  EXPECT_EQ(b.speaker, 0.0);
  const Tensor off = g.grad(spk);
  for (double v : off.values()) EXPECT_EQ(v, 0.0);

  Graph g2(true);
  LossBreakdown b2 = total_loss(fx.bind(g2, &spk), LossWeights{});
  g2.backward(b2.total);
  double norm = 0.0;
  const Tensor on = g2.grad(spk);
  for (double v : on.values()) norm += v * v;
  EXPECT_GT(norm, 0.0);
}

TEST(TotalLoss, DisabledHeadsAreSkippedAndBadWeightsRejected) {
  LossFixture fx;
  Graph g(false);
  LossInputs in = fx.bind(g);
  in.speaker_logits = Var();
  in.semantic_logits = Var();
  LossBreakdown b = total_loss(in, LossWeights{});
  EXPECT_EQ(b.speaker, 0.0);
  EXPECT_EQ(b.semantic, 0.0);
  EXPECT_GT(b.acoustic, 0.0);
  EXPECT_THROW(total_loss(in, LossWeights{0, 0, 0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(total_loss(in, LossWeights{1, -0.5, 0, 0, 0}), std::invalid_argument);
}

}  // namespace
}  // namespace cuesep
