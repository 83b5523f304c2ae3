// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "cuesep/model.hpp"
#include "cuesep/objectives.hpp"

namespace cuesep {

double si_snri(std::span<const double> est, std::span<const double> mix, std::span<const double> ref) {
  if (est.size() != mix.size() || est.size() != ref.size())
    throw std::invalid_argument("si_snri: length mismatch");
  return si_snr(est, ref) - si_snr(mix, ref);
}

double sdr(std::span<const double> est, std::span<const double> ref) {
  if (est.size() != ref.size()) throw std::invalid_argument("sdr: length mismatch");
  double rr = 0.0, ee = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    rr += ref[i] * ref[i];
    ee += (est[i] - ref[i]) * (est[i] - ref[i]);
  }
  if (rr <= 0.0) throw std::invalid_argument("degenerate reference");
  const double ratio = ee > 0.0 ? std::clamp(rr / ee, 1e-10, 1e10) : 1e10;
  return 10.0 * std::log10(ratio);
}

Waveform ModelExtractor::extract(const Waveform& mixture, const FrameSeq& video,
                                 const FrameMask* feature_mask) const {
  Graph g(false);
  ForwardOutput out = model_->forward(g, mixture, video, feature_mask);
  return Waveform{out.estimate.value().storage(), mixture.sample_rate};
}

double EvalReport::mean_sisnri() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.sisnri_db;
  return s / rows.size();
}

double EvalReport::mean_sdr() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.sdr_db;
  return s / rows.size();
}

EvalReport run_eval(const Extractor& extractor, const std::vector<MixtureSample>& dataset,
                    const std::vector<EvalCase>& cases, std::uint64_t seed) {
  EvalReport report;
  for (const auto& c : cases)
    for (const auto& s : dataset) {
      const std::uint64_t case_seed = seed * 1000003ULL + static_cast<std::uint64_t>(s.sample_id);
      const DegradationSpec spec =
          make_degradation(c.kind, s.video.num_frames(), c.proportion, case_seed);
      Waveform est;
      if (acts_on_features(c.kind)) {
        est = extractor.extract(s.mixture, s.video, &spec.mask);
      } else {
        est = extractor.extract(s.mixture, degrade(s.video, spec, case_seed), nullptr);
      }
      EvalRow row;
      row.sample_id = s.sample_id;
      row.degradation = to_string(c.kind);
      row.proportion = c.proportion;
      row.sisnri_db = si_snri(est.samples, s.mixture.samples, s.target.samples);
      row.sdr_db = sdr(est.samples, s.target.samples);
      report.rows.push_back(row);
    }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const EvalRow& a, const EvalRow& b) {
    if (a.degradation != b.degradation) return a.degradation < b.degradation;
    if (a.proportion != b.proportion) return a.proportion < b.proportion;
    return a.sample_id < b.sample_id;
  });
  return report;
}

void write_eval_csv(std::ostream& os, const EvalReport& report) {
  os << "sample_id,degradation,proportion,sisnri_db,sdr_db\n";
  char buf[160];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.4f,%.9f,%.9f\n", r.sample_id, r.degradation.c_str(),
                  r.proportion, r.sisnri_db, r.sdr_db);
    os << buf;
  }
}

}  // namespace cuesep
