// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cuesep/data_synth.hpp"
#include "cuesep/degradation.hpp"

namespace cuesep {

class CueSepModel;

double si_snri(std::span<const double> est, std::span<const double> mix, std::span<const double> ref);
// Plain signal-to-distortion ratio, clamped like si_snr.
double sdr(std::span<const double> est, std::span<const double> ref);

// Anything that maps a (possibly degraded) sample to a target estimate.
class Extractor {
 public:
  virtual ~Extractor() = default;
  // `feature_mask` is set for degradations applied after the visual encoder.
  virtual Waveform extract(const Waveform& mixture, const FrameSeq& video,
                           const FrameMask* feature_mask) const = 0;
};

// Returns the mixture unchanged; the zero-improvement reference.
class MixturePassthrough : public Extractor {
 public:
  Waveform extract(const Waveform& mixture, const FrameSeq&, const FrameMask*) const override {
    return mixture;
  }
};

class ModelExtractor : public Extractor {
 public:
  explicit ModelExtractor(const CueSepModel& model) : model_(&model) {}
  Waveform extract(const Waveform& mixture, const FrameSeq& video,
                   const FrameMask* feature_mask) const override;

 private:
  const CueSepModel* model_;
};

struct EvalCase {
  DegradationKind kind = DegradationKind::kFaceMissing;
  double proportion = 0.0;
};

struct EvalRow {
  int sample_id = 0;
  std::string degradation;
  double proportion = 0.0;
  double sisnri_db = 0.0;
  double sdr_db = 0.0;
};

struct EvalReport {
  std::string model_tag;
  std::vector<EvalRow> rows;  // sorted by (degradation, proportion, sample_id)

  double mean_sisnri() const;
  double mean_sdr() const;
};

// Degradation seeds derive from `seed` and the sample id, so a case with the
// same inputs always sees the same mask.
EvalReport run_eval(const Extractor& extractor, const std::vector<MixtureSample>& dataset,
                    const std::vector<EvalCase>& cases, std::uint64_t seed);

void write_eval_csv(std::ostream& os, const EvalReport& report);

}  // namespace cuesep
