// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "cuesep/experiments.hpp"

namespace cuesep {
namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

TEST(Ablation, NineDistinctRunnableVariants) {
  auto v = ablation_variants();
  ASSERT_EQ(v.size(), 9u);
  std::set<std::string> labels;
  for (const auto& a : v) labels.insert(a.label());
  EXPECT_EQ(labels.size(), 9u);
  EXPECT_EQ(v.back().fusion, FusionMode::kConcat);
  EXPECT_TRUE(labels.count("none/interaction"));
}

TEST(Ablation, DisabledCueReportsZeroGradient) {
  RunConfig cfg;
  cfg.num_samples = 1;
  cfg.duration_s = 1.0;
  cfg.steps = 2;
  const auto heldout = heldout_corpus(cfg, 1);
  AblationResult r = run_ablation_variant(cfg, {{false, true, false}, FusionMode::kInteraction}, heldout);
  EXPECT_EQ(r.disabled_grad_norm, 0.0);
  EXPECT_TRUE(std::isfinite(r.final_loss));
  std::ostringstream os;
  write_ablation_csv(os, {r});
  auto l = lines(os.str());
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[1].substr(0, l[1].find(',', l[1].find(',') + 1)), "acoustic,interaction");
}

TEST(HeldOut, DiffersFromTrainingCorpus) {
  RunConfig cfg;
  cfg.num_samples = 2;
  cfg.duration_s = 0.5;
  auto train = synth_corpus(cfg.corpus());
  auto held = heldout_corpus(cfg, 2);
  ASSERT_EQ(held.size(), 2u);
  EXPECT_NE(train[0].mixture.samples, held[0].mixture.samples);
  EXPECT_EQ(heldout_corpus(cfg, 2)[1].mixture.samples, held[1].mixture.samples);
}

TEST(Sweep, OneReportPerKindOverEveryProportion) {
  RunConfig cfg;
  cfg.duration_s = 0.5;
  auto data = heldout_corpus(cfg, 2);
  auto reports = sweep_degradations(MixturePassthrough{}, data,
                                    {DegradationKind::kMaskedFeature, DegradationKind::kGaussianBlur},
                                    sweep_proportions(), 1);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].model_tag, "mf");
  EXPECT_EQ(reports[1].rows.size(), sweep_proportions().size() * data.size());
}

TEST(AttentionDump, RowsPerFrameAndDistributionPerFeature) {
  RunConfig cfg;
  CueSepModel model(cfg.model, 1);
  auto data = heldout_corpus(cfg, 1);
  Tensor psi = attention_trace(model, data[0]);
  std::ostringstream os;
  write_attention_csv(os, psi, {0, 5});
  auto l = lines(os.str());
  ASSERT_EQ(l.size(), 51u);
  EXPECT_EQ(l[0], "t,speaker_h0,acoustic_h0,semantic_h0,speaker_h5,acoustic_h5,semantic_h5");
  double spread = 0.0;
  for (std::size_t i = 1; i < l.size(); ++i) {
    std::istringstream row(l[i]);
    std::string cell;
    std::getline(row, cell, ',');
    EXPECT_EQ(std::stoi(cell), static_cast<int>(i) - 1);
    for (int h = 0; h < 2; ++h) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j) {
        std::getline(row, cell, ',');
        const double v = std::stod(cell);
        s += v;
        spread = std::max(spread, std::abs(v - 1.0 / 3.0));
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
  // An untrained model sits near the uniform distribution.
  EXPECT_LT(spread, 0.1);
  std::ostringstream bad;
  EXPECT_THROW(write_attention_csv(bad, psi, {cfg.model.width}), std::out_of_range);
  EXPECT_THROW(write_attention_csv(bad, psi, {-1}), std::out_of_range);
}

TEST(AttentionDump, ConcatModelHasNoAttention) {
  RunConfig cfg;
  cfg.model.fusion = FusionMode::kConcat;
  CueSepModel model(cfg.model, 1);
  cfg.duration_s = 0.5;
  auto data = heldout_corpus(cfg, 1);
  EXPECT_THROW(attention_trace(model, data[0]), std::invalid_argument);
}

}  // namespace
}  // namespace cuesep
