// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/training.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cuesep/metrics.hpp"
#include "json.hpp"

namespace cuesep {

CorpusSpec RunConfig::corpus() const {
  CorpusSpec c;
  c.num_samples = num_samples;
  c.num_speakers = model.num_speakers;
  c.duration_s = duration_s;
  c.snr_min_db = snr_min_db;
  c.snr_max_db = snr_max_db;
  c.seed = data_seed;
  return c;
}

// ------------------------------------------------------------------- config

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v[0] == '-')
    throw std::invalid_argument(key + ": expected a nonnegative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

void set_option(RunConfig& c, const std::string& key, const std::string& v) {
  ModelConfig& m = c.model;
  if (key == "preset") {
    // A preset resets the architecture but keeps cue and fusion choices.
    ModelConfig fresh = preset_config(v);
    fresh.cues = m.cues;
    fresh.fusion = m.fusion;
    m = fresh;
  } else if (key == "feature_dim") m.feature_dim = to_int(key, v);
  else if (key == "width") m.width = to_int(key, v);
  else if (key == "lstm_hidden") m.lstm_hidden = to_int(key, v);
  else if (key == "chunk") m.chunk = to_int(key, v);
  else if (key == "encoder_kernel") m.encoder_kernel = to_int(key, v);
  else if (key == "encoder_stride") m.encoder_stride = to_int(key, v);
  else if (key == "visual_channels") {
    std::stringstream ss(v);
    std::string item;
    int i = 0;
    while (std::getline(ss, item, ',')) {
      if (i >= 3) throw std::invalid_argument("visual_channels: expected three values");
      m.visual_channels[i++] = to_int(key, trim(item));
    }
    if (i != 3) throw std::invalid_argument("visual_channels: expected three values");
  } else if (key == "num_blocks") m.num_blocks = to_int(key, v);
  else if (key == "num_speakers") m.num_speakers = to_int(key, v);
  else if (key == "acoustic_classes") m.acoustic_classes = to_int(key, v);
  else if (key == "semantic_classes") m.semantic_classes = to_int(key, v);
  else if (key == "cues") m.cues = parse_cues(v);
  else if (key == "fusion") m.fusion = parse_fusion(v);
  else if (key == "learning_rate") c.learning_rate = to_double(key, v);
  else if (key == "batch_size") c.batch_size = to_int(key, v);
  else if (key == "scheduler_patience") c.scheduler_patience = to_int(key, v);
  else if (key == "scheduler_factor") c.scheduler_factor = to_double(key, v);
  else if (key == "grad_clip") c.grad_clip = to_double(key, v);
  else if (key == "steps") c.steps = to_int(key, v);
  else if (key == "seed") c.seed = to_u64(key, v);
  else if (key == "data_seed") c.data_seed = to_u64(key, v);
  else if (key == "w_sisnr") c.weights.sisnr = to_double(key, v);
  else if (key == "w_stft") c.weights.stft = to_double(key, v);
  else if (key == "w_spk") c.weights.speaker = to_double(key, v);
  else if (key == "w_acoustic") c.weights.acoustic = to_double(key, v);
  else if (key == "w_semantic") c.weights.semantic = to_double(key, v);
  else if (key == "num_samples") c.num_samples = to_int(key, v);
  else if (key == "duration_s") c.duration_s = to_double(key, v);
  else if (key == "snr_min_db") c.snr_min_db = to_double(key, v);
  else if (key == "snr_max_db") c.snr_max_db = to_double(key, v);
  else if (key == "codebook_clips") c.codebook_clips = to_int(key, v);
  else if (key == "deterministic") c.deterministic = to_bool(key, v);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> config_items(const RunConfig& c) {
  const ModelConfig& m = c.model;
  const auto vc = std::to_string(m.visual_channels[0]) + "," + std::to_string(m.visual_channels[1]) +
                  "," + std::to_string(m.visual_channels[2]);
  return {
      {"preset", m.preset},
      {"feature_dim", std::to_string(m.feature_dim)},
      {"width", std::to_string(m.width)},
      {"lstm_hidden", std::to_string(m.lstm_hidden)},
      {"chunk", std::to_string(m.chunk)},
      {"encoder_kernel", std::to_string(m.encoder_kernel)},
      {"encoder_stride", std::to_string(m.encoder_stride)},
      {"visual_channels", vc},
      {"num_blocks", std::to_string(m.num_blocks)},
      {"num_speakers", std::to_string(m.num_speakers)},
      {"acoustic_classes", std::to_string(m.acoustic_classes)},
      {"semantic_classes", std::to_string(m.semantic_classes)},
      {"cues", cues_string(m.cues)},
      {"fusion", to_string(m.fusion)},
      {"learning_rate", fmt_double(c.learning_rate)},
      {"batch_size", std::to_string(c.batch_size)},
      {"scheduler_patience", std::to_string(c.scheduler_patience)},
      {"scheduler_factor", fmt_double(c.scheduler_factor)},
      {"grad_clip", fmt_double(c.grad_clip)},
      {"steps", std::to_string(c.steps)},
      {"seed", std::to_string(c.seed)},
      {"data_seed", std::to_string(c.data_seed)},
      {"w_sisnr", fmt_double(c.weights.sisnr)},
      {"w_stft", fmt_double(c.weights.stft)},
      {"w_spk", fmt_double(c.weights.speaker)},
      {"w_acoustic", fmt_double(c.weights.acoustic)},
      {"w_semantic", fmt_double(c.weights.semantic)},
      {"num_samples", std::to_string(c.num_samples)},
      {"duration_s", fmt_double(c.duration_s)},
      {"snr_min_db", fmt_double(c.snr_min_db)},
      {"snr_max_db", fmt_double(c.snr_max_db)},
      {"codebook_clips", std::to_string(c.codebook_clips)},
      {"deterministic", c.deterministic ? "true" : "false"},
  };
}

RunConfig parse_run_config(std::istream& is) {
  std::vector<std::pair<std::string, std::string>> items;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    items.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  RunConfig cfg;
  // The preset goes first so explicit sizes can override it.
  for (const auto& [k, v] : items)
    if (k == "preset") set_option(cfg, k, v);
  for (const auto& [k, v] : items)
    if (k != "preset") set_option(cfg, k, v);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  return parse_run_config(is);
}

void write_run_config(std::ostream& os, const RunConfig& cfg) {
  for (const auto& [k, v] : config_items(cfg)) os << k << " = " << v << '\n';
}

// -------------------------------------------------------------- supervision

Supervision build_supervision(const std::vector<MixtureSample>& train, const RunConfig& cfg) {
  const ModelConfig& m = cfg.model;
  const bool want_a = m.cues[kAcousticCue] && cfg.weights.acoustic > 0.0;
  const bool want_w = m.cues[kSemanticCue] && cfg.weights.semantic > 0.0;
  Supervision sup;
  if (!want_a && !want_w) return sup;

  std::vector<Waveform> pool;
  for (const auto& s : train) pool.push_back(s.target);
  const int needed_points = 2 * std::max(want_a ? m.acoustic_classes : 0, want_w ? m.semantic_classes : 0);
  int points = 0;
  for (const auto& w : pool) points += video_frames_for(w.length());
  std::mt19937_64 rng(cfg.data_seed ^ 0x5eedc0deb00cULL);
  const int frames_per_clip = std::max(1, video_frames_for(static_cast<int>(cfg.duration_s * kSampleRate)));
  while (static_cast<int>(pool.size()) < cfg.codebook_clips || points < needed_points) {
    const int spk = static_cast<int>(pool.size()) % m.num_speakers;
    pool.push_back(synth_av_pair(rng(), cfg.duration_s, spk, m.num_speakers).first);
    points += frames_per_clip;
  }

  const LogMelContextExtractor semantic_extractor;
  auto fit = [&](bool acoustic, int clusters, std::uint64_t seed, Codebook& cb,
                 std::vector<std::vector<int>>& tokens) {
    std::vector<FrameFeatures> feats;
    for (const auto& w : pool)
      feats.push_back(acoustic ? acoustic_features(w) : semantic_extractor.extract(w));
    cb = fit_kmeans(feature_points(feats), clusters, seed);
    for (std::size_t i = 0; i < train.size(); ++i) tokens.push_back(tokenize(feats[i], cb));
  };
  if (want_a) fit(true, m.acoustic_classes, cfg.seed + 11, sup.acoustic, sup.acoustic_tokens);
  if (want_w) fit(false, m.semantic_classes, cfg.seed + 13, sup.semantic, sup.semantic_tokens);
  return sup;
}

// ---------------------------------------------------------------- logging

void write_log_header(std::ostream& os) { os << "step,lr,total,sisnr,stft,spk,acoustic,semantic\n"; }

void write_log_row(std::ostream& os, const StepLog& r) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%d,%.9g,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e\n", r.step, r.lr,
                r.total, r.sisnr, r.stft, r.speaker, r.acoustic, r.semantic);
  os << buf;
}

// -------------------------------------------------------------- optimizer

Adam::Adam(ParamStore& store, double lr, double beta1, double beta2, double eps)
    : params_(store.all()), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (p.grad.empty()) continue;
    double* w = p.value.data();
    const double* g = p.grad.data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      w[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
    }
  }
}

double PlateauScheduler::observe(double metric, double lr) {
  if (!has_best_ || metric < best_) {
    best_ = metric;
    has_best_ = true;
    bad_epochs_ = 0;
    return lr;
  }
  if (++bad_epochs_ >= patience_) {
    bad_epochs_ = 0;
    return lr * factor_;
  }
  return lr;
}

double grad_norm(const ParamStore& store, const std::string& prefix) {
  double s = 0.0;
  for (const Parameter* p : store.all())
    if (p->name.rfind(prefix, 0) == 0)
      for (double g : p->grad.values()) s += g * g;
  return std::sqrt(s);
}

double global_grad_norm(const ParamStore& store) { return grad_norm(store, ""); }

// ---------------------------------------------------------------- trainer

void enable_determinism() { Eigen::setNbThreads(1); }

namespace {
void validate(const RunConfig& c) {
  require(c.batch_size >= 1, "batch_size must be at least 1");
  require(c.num_samples >= 1, "num_samples must be at least 1");
  require(c.learning_rate > 0.0, "learning_rate must be positive");
  require(c.scheduler_patience >= 1, "scheduler_patience must be at least 1");
  require(c.scheduler_factor > 0.0 && c.scheduler_factor <= 1.0, "scheduler_factor must be in (0, 1]");
  require(c.grad_clip >= 0.0, "grad_clip must be nonnegative");
  require(c.steps >= 0, "steps must be nonnegative");
}

RunConfig checked(const RunConfig& c) {
  validate(c);
  if (c.deterministic) enable_determinism();
  return c;
}
}  // namespace

Trainer::Trainer(const RunConfig& cfg)
    : cfg_(checked(cfg)),
      data_(synth_corpus(cfg_.corpus())),
      sup_(build_supervision(data_, cfg_)),
      model_(std::make_unique<CueSepModel>(cfg_.model, cfg_.seed)),
      adam_(model_->params(), cfg_.learning_rate),
      sched_(cfg_.scheduler_patience, cfg_.scheduler_factor),
      order_rng_(cfg_.seed ^ 0x9e3779b97f4a7c15ULL) {
  order_.resize(data_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
  std::shuffle(order_.begin(), order_.end(), order_rng_);
}

StepLog Trainer::step() {
  ParamStore& store = model_->params();
  store.zero_grad();
  StepLog row;
  row.step = ++step_;
  row.lr = adam_.lr();
  const double inv_b = 1.0 / cfg_.batch_size;
  for (int b = 0; b < cfg_.batch_size; ++b) {
    if (cursor_ == order_.size()) {
      cursor_ = 0;
      std::shuffle(order_.begin(), order_.end(), order_rng_);
    }
    const int idx = order_[cursor_++];
    const MixtureSample& s = data_[idx];
    Graph g(true);
    ForwardOutput out = model_->forward(g, s.mixture, s.video);
    const Tensor ref = s.target.tensor();
    LossInputs in;
    in.estimate = out.estimate;
    in.reference = &ref;
    in.speaker_logits = out.low.speaker_logits;
    in.speaker_id = s.speaker_id;
    if (!sup_.acoustic_tokens.empty()) {
      in.acoustic_logits = out.low.acoustic_logits;
      in.acoustic_tokens = &sup_.acoustic_tokens[idx];
    }
    if (!sup_.semantic_tokens.empty()) {
      in.semantic_logits = out.high.semantic_logits;
      in.semantic_tokens = &sup_.semantic_tokens[idx];
    }
    LossBreakdown loss = total_loss(in, cfg_.weights);
    g.backward(ops::scale(loss.total, inv_b));
    g.flush_param_grads();
    row.total += inv_b * loss.total.value()[0];
    row.sisnr += inv_b * loss.sisnr;
    row.stft += inv_b * loss.stft;
    row.speaker += inv_b * loss.speaker;
    row.acoustic += inv_b * loss.acoustic;
    row.semantic += inv_b * loss.semantic;
    epoch_loss_ += loss.total.value()[0];
    ++epoch_count_;
  }
  if (cfg_.grad_clip > 0.0) {
    const double norm = global_grad_norm(store);
    if (norm > cfg_.grad_clip) {
      const double k = cfg_.grad_clip / norm;
      for (Parameter* p : store.all())
        for (double& gv : p->grad.values()) gv *= k;
    }
  }
  adam_.step();
  if (epoch_count_ >= static_cast<int>(data_.size())) {
    adam_.set_lr(sched_.observe(epoch_loss_ / epoch_count_, adam_.lr()));
    epoch_loss_ = 0.0;
    epoch_count_ = 0;
  }
  return row;
}

void Trainer::train(std::ostream* log, const std::function<bool(const StepLog&)>& on_step) {
  if (log) write_log_header(*log);
  while (step_ < cfg_.steps) {
    const StepLog row = step();
    if (log) write_log_row(*log, row);
    if (on_step && !on_step(row)) break;
  }
}

double Trainer::train_sisnri() const {
  const ModelExtractor ex(*model_);
  return run_eval(ex, data_, {EvalCase{DegradationKind::kFaceMissing, 0.0}}, 0).mean_sisnri();
}

// -------------------------------------------------------------- checkpoint

namespace {
constexpr char kMagic[] = "CUESEP-CKPT 1\n";
}

void save_checkpoint(const std::string& path, const RunConfig& cfg, const CueSepModel& model) {
  nlohmann::json header;
  nlohmann::json conf = nlohmann::json::object();
  for (const auto& [k, v] : config_items(cfg)) conf[k] = v;
  header["config"] = conf;
  header["params"] = nlohmann::json::array();
  for (const Parameter* p : model.params().all())
    header["params"].push_back({{"name", p->name}, {"shape", p->value.shape()}});
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  os << kMagic << header.dump() << '\n';
  for (const Parameter* p : model.params().all())
    os.write(reinterpret_cast<const char*>(p->value.data()),
             static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  if (!os) throw std::runtime_error("failed writing checkpoint " + path);
}

LoadedModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("missing checkpoint " + path);
  std::string magic;
  std::getline(is, magic);
  if (magic + "\n" != kMagic) throw std::runtime_error(path + " is not a checkpoint");
  std::string line;
  std::getline(is, line);
  const auto header = nlohmann::json::parse(line);
  LoadedModel out;
  const auto& conf = header.at("config");
  // Preset first, matching the text-config precedence.
  set_option(out.config, "preset", conf.at("preset").get<std::string>());
  for (const auto& [k, v] : conf.items())
    if (k != "preset") set_option(out.config, k, v.get<std::string>());
  out.model = std::make_unique<CueSepModel>(out.config.model, out.config.seed);
  auto params = out.model->params().all();
  const auto& listed = header.at("params");
  if (listed.size() != params.size())
    throw std::runtime_error("checkpoint lists " + std::to_string(listed.size()) +
                             " parameters, config builds " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto name = listed[i].at("name").get<std::string>();
    const auto shape = listed[i].at("shape").get<Shape>();
    if (name != params[i]->name || shape != params[i]->value.shape())
      throw std::runtime_error("checkpoint parameter " + name + " does not match " + params[i]->name);
    is.read(reinterpret_cast<char*>(params[i]->value.data()),
            static_cast<std::streamsize>(params[i]->value.size() * sizeof(double)));
  }
  if (!is) throw std::runtime_error("truncated checkpoint " + path);
  return out;
}

}  // namespace cuesep
