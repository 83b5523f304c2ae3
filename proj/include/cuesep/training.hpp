// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cuesep/data_synth.hpp"
#include "cuesep/model.hpp"
#include "cuesep/objectives.hpp"
#include "cuesep/supervision.hpp"

namespace cuesep {

struct RunConfig {
  ModelConfig model = preset_config("toy");

  double learning_rate = 1e-3;
  int batch_size = 1;
  int scheduler_patience = 10;  // epochs without improvement
  double scheduler_factor = 0.5;
  double grad_clip = 5.0;  // global norm; 0 disables
  int steps = 2000;

  std::uint64_t seed = 0;       // parameter init and sample order
  std::uint64_t data_seed = 0;  // corpus synthesis
  LossWeights weights;

  int num_samples = 8;
  double duration_s = 2.0;
  double snr_min_db = -5.0;
  double snr_max_db = 5.0;
  // Minimum number of clean clips behind the token codebooks; extra clips are
  // synthesized when the training targets alone are too few.
  int codebook_clips = 0;

  bool deterministic = false;

  CorpusSpec corpus() const;
};

// Pins the linear-algebra kernels to one thread for bit-reproducible runs.
void enable_determinism();

// Flat "key = value" text. Unknown keys are errors; '#' starts a comment.
void set_option(RunConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::pair<std::string, std::string>> config_items(const RunConfig& cfg);
RunConfig parse_run_config(std::istream& is);
RunConfig load_run_config(const std::string& path);
void write_run_config(std::ostream& os, const RunConfig& cfg);

// Token targets for every training sample, from codebooks fitted on clean speech.
struct Supervision {
  Codebook acoustic, semantic;
  std::vector<std::vector<int>> acoustic_tokens, semantic_tokens;
};

Supervision build_supervision(const std::vector<MixtureSample>& train, const RunConfig& cfg);

struct StepLog {
  int step = 0;
  double lr = 0.0;
  double total = 0.0;
  double sisnr = 0.0;
  double stft = 0.0;
  double speaker = 0.0;
  double acoustic = 0.0;
  double semantic = 0.0;
};

void write_log_header(std::ostream& os);
void write_log_row(std::ostream& os, const StepLog& row);

class Adam {
 public:
  Adam(ParamStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step();
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Halves (by `factor`) the learning rate after `patience` epochs whose mean
// loss fails to improve on the best so far.
class PlateauScheduler {
 public:
  PlateauScheduler(int patience, double factor) : patience_(patience), factor_(factor) {}
  // Returns the new learning rate.
  double observe(double metric, double lr);

 private:
  int patience_;
  double factor_;
  double best_ = 0.0;
  bool has_best_ = false;
  int bad_epochs_ = 0;
};

double global_grad_norm(const ParamStore& store);
// Gradient norm over parameters whose name starts with `prefix`.
double grad_norm(const ParamStore& store, const std::string& prefix);

class Trainer {
 public:
  explicit Trainer(const RunConfig& cfg);

  // One optimizer step over batch_size samples.
  StepLog step();
  // Runs until cfg.steps; rows go to `log` when given. `on_step` may return
  // false to stop early.
  void train(std::ostream* log, const std::function<bool(const StepLog&)>& on_step = {});

  // Mean clean SI-SNRi of the model over the training set.
  double train_sisnri() const;

  CueSepModel& model() { return *model_; }
  const CueSepModel& model() const { return *model_; }
  const RunConfig& config() const { return cfg_; }
  const std::vector<MixtureSample>& dataset() const { return data_; }
  const Supervision& supervision() const { return sup_; }
  int steps_done() const { return step_; }
  double learning_rate() const { return adam_.lr(); }

 private:
  RunConfig cfg_;
  std::vector<MixtureSample> data_;
  Supervision sup_;
  std::unique_ptr<CueSepModel> model_;
  Adam adam_;
  PlateauScheduler sched_;
  std::mt19937_64 order_rng_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
  int step_ = 0;
  double epoch_loss_ = 0.0;
  int epoch_count_ = 0;
};

// Self-describing checkpoint: magic line, JSON header (config, parameter
// names and shapes), then raw little-endian doubles in registration order.
void save_checkpoint(const std::string& path, const RunConfig& cfg, const CueSepModel& model);
struct LoadedModel {
  RunConfig config;
  std::unique_ptr<CueSepModel> model;
};
LoadedModel load_checkpoint(const std::string& path);

}  // namespace cuesep
