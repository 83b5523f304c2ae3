// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <sstream>

#include "cuesep/metrics.hpp"
#include "cuesep/model.hpp"
#include "cuesep/objectives.hpp"
#include "gradcheck.hpp"

namespace cuesep {
namespace {

using testing::random_tensor;

std::vector<MixtureSample> small_corpus(int n = 3) {
  CorpusSpec spec;
  spec.num_samples = n;
  spec.duration_s = 1.0;
  spec.seed = 21;
  return synth_corpus(spec);
}

TEST(SiSnri, ZeroForThePassthroughAndAdditive) {
  std::mt19937_64 rng(1);
  auto ref = random_tensor({300}, rng).storage(), mix = random_tensor({300}, rng).storage();
  auto est = random_tensor({300}, rng).storage();
  EXPECT_EQ(si_snri(mix, mix, ref), 0.0);
  EXPECT_NEAR(si_snri(est, mix, ref), si_snr(est, ref) - si_snr(mix, ref), 1e-12);
  EXPECT_THROW(si_snri(est, std::vector<double>(10), ref), std::invalid_argument);
}

TEST(Sdr, HandCases) {
  std::vector<double> ref{1, 2, 3, 4};
  std::vector<double> half{0.5, 1, 1.5, 2};
  // Error power equals a quarter of the reference power.
  EXPECT_NEAR(sdr(half, ref), 10.0 * std::log10(4.0), 1e-12);
  EXPECT_NEAR(sdr(ref, ref), 100.0, 1e-12);
  EXPECT_THROW(sdr(ref, std::vector<double>(4, 0.0)), std::invalid_argument);
  // Unlike SI-SNR, plain SDR punishes a wrong gain.
  std::vector<double> doubled{2, 4, 6, 8};
  EXPECT_NEAR(sdr(doubled, ref), 0.0, 1e-12);
  EXPECT_NEAR(si_snr(doubled, ref), 100.0, 1e-9);
}

TEST(RunEval, PassthroughScoresZeroAndCoversEveryCase) {
  auto data = small_corpus();
  std::vector<EvalCase> cases;
  for (auto k : {DegradationKind::kFaceMissing, DegradationKind::kGaussianBlur,
                 DegradationKind::kConcealment, DegradationKind::kMaskedFeature})
    for (double p : {0.0, 0.5, 1.0}) cases.push_back({k, p});
  EvalReport r = run_eval(MixturePassthrough{}, data, cases, 5);
  ASSERT_EQ(r.rows.size(), cases.size() * data.size());
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.sisnri_db, 0.0);
    EXPECT_NEAR(row.sdr_db, sdr(data[row.sample_id].mixture.samples, data[row.sample_id].target.samples), 1e-12);
  }
  EXPECT_EQ(r.mean_sisnri(), 0.0);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    const auto& a = r.rows[i - 1];
    const auto& b = r.rows[i];
    EXPECT_TRUE(std::tie(a.degradation, a.proportion, a.sample_id) <
                std::tie(b.degradation, b.proportion, b.sample_id));
  }
}

// Records the video each call sees so the degradation plumbing can be checked.
class Recorder : public Extractor {
 public:
  mutable std::vector<FrameSeq> videos;
  mutable std::vector<bool> had_mask;
  Waveform extract(const Waveform& mix, const FrameSeq& video, const FrameMask* m) const override {
    videos.push_back(video);
    had_mask.push_back(m != nullptr);
    return mix;
  }
};

TEST(RunEval, RoutesDegradationsToTheRightStage) {
  auto data = small_corpus(1);
  Recorder rec;
  run_eval(rec, data, {{DegradationKind::kFaceMissing, 0.0},
                       {DegradationKind::kGaussianBlur, 1.0},
                       {DegradationKind::kMaskedFeature, 1.0}},
           3);
  ASSERT_EQ(rec.videos.size(), 3u);
  EXPECT_EQ(rec.videos[0].frames.storage(), data[0].video.frames.storage());
  EXPECT_NE(rec.videos[1].frames.storage(), data[0].video.frames.storage());
  EXPECT_FALSE(rec.had_mask[1]);
  EXPECT_EQ(rec.videos[2].frames.storage(), data[0].video.frames.storage());
  EXPECT_TRUE(rec.had_mask[2]);
}

TEST(RunEval, CsvIsDeterministicAndCleanEqualsZeroProportion) {
  auto data = small_corpus(2);
  CueSepModel model(preset_config("toy"), 3);
  ModelExtractor ex(model);
  const std::vector<EvalCase> cases{{DegradationKind::kFaceMissing, 0.0},
                                    {DegradationKind::kConcealment, 0.0},
                                    {DegradationKind::kGaussianBlur, 0.5}};
  std::ostringstream a, b;
  EvalReport ra = run_eval(ex, data, cases, 7);
  write_eval_csv(a, ra);
  write_eval_csv(b, run_eval(ex, data, cases, 7));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "sample_id,degradation,proportion,sisnri_db,sdr_db");
  // Any degradation at p = 0 leaves the input untouched.
  for (int i = 0; i < 2; ++i) {
    const EvalRow* fm = nullptr;
    const EvalRow* cc = nullptr;
    for (const auto& r : ra.rows) {
      if (r.sample_id != i || r.proportion != 0.0) continue;
      (r.degradation == to_string(DegradationKind::kFaceMissing) ? fm : cc) = &r;
    }
    ASSERT_TRUE(fm && cc);
    EXPECT_EQ(fm->sisnri_db, cc->sisnri_db);
  }
}

}  // namespace
}  // namespace cuesep
