// Copyright 2026 The notegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Training loop: ingest a MIDI directory, window it, and run epochs of
// shuffled mini-batches through forward -> MSE -> backward -> clip -> RMSprop.
//
// Metrics CSV columns: scope,epoch,batch,loss,accuracy,wall_seconds. One
// "batch" row per update and one "epoch" row (means over that epoch's batch
// rows) after each epoch. Epochs and batches count from 1. wall_seconds is
// left empty unless TrainConfig::record_wall_time is set, which keeps the
// file byte-identical across runs with the same seed.
//
// Histogram CSV columns: epoch,tensor,min,max,mean,std, one row per
// parameter tensor per epoch.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "notegen/checkpoint.hpp"
#include "notegen/error.hpp"
#include "notegen/midi.hpp"
#include "notegen/model.hpp"
#include "notegen/note_matrix.hpp"
#include "notegen/optim.hpp"

namespace notegen {

namespace fs = std::filesystem;

struct TrainConfig {
  fs::path corpus_dir;
  std::size_t window = 50;
  std::size_t hidden = 512;
  double dropout_rate = 0.75;
  double lr = 1e-4;
  double rho = 0.9;
  double epsilon = 1e-8;
  std::size_t batch_size = 64;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  std::optional<double> clip_norm = 5.0;
  fs::path checkpoint_path = "model.ngckpt";
  fs::path metrics_path = "metrics.csv";
  fs::path histogram_path;  // empty: no histogram CSV
  std::size_t checkpoint_every = 1;
  bool record_wall_time = false;

  void validate() const {
    auto bad = [](const std::string& what) { fail(Errc::InvalidConfig, what); };
    if (window == 0) bad("window must be >= 1");
    if (hidden == 0) bad("hidden must be >= 1");
    if (batch_size == 0) bad("batch size must be >= 1");
    if (epochs == 0) bad("epochs must be >= 1");
    if (checkpoint_every == 0) bad("checkpoint interval must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) bad("dropout must be in [0, 1)");
    if (!(lr > 0.0) || !std::isfinite(lr)) bad("learning rate must be positive");
    if (!(rho >= 0.0 && rho < 1.0)) bad("rho must be in [0, 1)");
    if (!(epsilon >= 0.0)) bad("epsilon must be >= 0");
    if (clip_norm && !(*clip_norm > 0.0)) bad("clip norm must be positive");
  }
};

enum class Scope { Batch, Epoch };

struct TrainRecord {
  Scope scope = Scope::Batch;
  std::size_t epoch = 0;
  std::optional<std::size_t> batch;
  double loss = 0.0;
  double accuracy = 0.0;
  std::optional<double> wall_seconds;

  bool operator==(const TrainRecord&) const = default;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr std::string_view kMetricsHeader = "scope,epoch,batch,loss,accuracy,wall_seconds";
inline constexpr std::string_view kHistogramHeader = "epoch,tensor,min,max,mean,std";

inline std::string to_csv_row(const TrainRecord& r) {
  std::string row = r.scope == Scope::Batch ? "batch," : "epoch,";
  row += std::to_string(r.epoch) + ",";
  if (r.batch) row += std::to_string(*r.batch);
  row += "," + format_double(r.loss) + "," + format_double(r.accuracy) + ",";
  if (r.wall_seconds) row += format_double(*r.wall_seconds);
  return row;
}

// ---------------------------------------------------------------------------
// Corpus

struct Corpus {
  std::vector<NoteMatrix> matrices;
  std::vector<fs::path> files;
  ScalingParams scaling;
  std::uint16_t division = 480;
  std::vector<std::string> warnings;
};

inline bool has_midi_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext == ".mid" || ext == ".midi";
}

inline midi::MidiFile read_midi_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open " + path.string());
  const midi::Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return midi::parse_midi(bytes);
}

inline void write_midi_file(const fs::path& path, const midi::MidiFile& file) {
  const auto bytes = midi::write_midi(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::Io, "write failed for " + path.string());
}

/// Reads every .mid/.midi file in `dir` (sorted by name). Files that fail to
/// parse are skipped with a warning. Tick values are kept as-is, so the
/// corpus division is that of the first retained file.
inline Corpus ingest_corpus(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(Errc::Io, dir.string() + " is not a directory");
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_midi_extension(entry.path())) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());

  Corpus corpus;
  for (const auto& path : paths) {
    try {
      const auto file = read_midi_file(path);
      if (!corpus.files.empty() && file.division != corpus.division) {
        corpus.warnings.push_back(path.filename().string() + ": division " + std::to_string(file.division) +
                                  " differs from corpus division " + std::to_string(corpus.division));
      }
      if (corpus.files.empty()) corpus.division = file.division;
      corpus.matrices.push_back(matrix_from_midi(file));
      corpus.files.push_back(path);
    } catch (const Error& e) {
      corpus.warnings.push_back("skipping " + path.filename().string() + ": " + e.what());
    }
  }
  if (corpus.matrices.empty()) fail(Errc::EmptyCorpus, "no parseable MIDI files in " + dir.string());
  corpus.scaling = fit_scaling(corpus.matrices);
  return corpus;
}

inline std::vector<Sample> corpus_samples(const Corpus& corpus, const ScalingParams& scaling, std::size_t window) {
  std::vector<Sample> samples;
  for (const auto& m : corpus.matrices) {
    auto s = make_samples(scale(m, scaling), window);
    std::move(s.begin(), s.end(), std::back_inserter(samples));
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Histogram summaries

struct TensorSummary {
  double min = 0.0, max = 0.0, mean = 0.0, std = 0.0;
};

inline TensorSummary summarize(const Tensor& t) {
  TensorSummary s;
  if (t.empty()) return s;
  s.min = *std::min_element(t.data().begin(), t.data().end());
  s.max = *std::max_element(t.data().begin(), t.data().end());
  double sum = 0.0;
  for (double v : t.data()) sum += v;
  s.mean = sum / static_cast<double>(t.size());
  double sq = 0.0;
  for (double v : t.data()) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(t.size()));
  return s;
}

// ---------------------------------------------------------------------------
// Session

struct TrainCallbacks {
  std::function<void(const TrainRecord&)> on_batch;
  std::function<void(const TrainRecord&)> on_epoch;
};

struct TrainResult {
  ModelParams params;
  std::vector<TrainRecord> records;
  Checkpoint checkpoint;
};

/// Owns model, optimizer and RNG state for one training run.
class TrainingSession {
 public:
  /// Fresh run: ingest, fit scaling, initialize parameters from config.seed.
  static TrainingSession start(const TrainConfig& config) {
    config.validate();
    Corpus corpus = ingest_corpus(config.corpus_dir);
    Rng rng(config.seed);
    ModelConfig mc;
    mc.hidden = config.hidden;
    mc.window = config.window;
    mc.dropout_rate = config.dropout_rate;
    Checkpoint state;
    state.params = ModelParams::init(mc, rng);
    state.scaling = corpus.scaling;
    state.division = corpus.division;
    state.optimizer = RmspropState::for_params(state.params, {config.lr, config.rho, config.epsilon});
    state.rng_state = rng.state();
    return TrainingSession(config, std::move(corpus), std::move(state), false);
  }

  /// Continues from a checkpoint. Model shape, scaling, optimizer settings
  /// and RNG come from the checkpoint; config supplies the corpus, batch
  /// size, clipping, outputs and the total epoch count.
  static TrainingSession resume(const TrainConfig& config, Checkpoint from) {
    config.validate();
    Corpus corpus = ingest_corpus(config.corpus_dir);
    return TrainingSession(config, std::move(corpus), std::move(from), true);
  }

  const Corpus& corpus() const { return corpus_; }
  const Checkpoint& state() const { return state_; }
  std::size_t sample_count() const { return samples_.size(); }
  std::size_t batches_per_epoch() const { return (samples_.size() + config_.batch_size - 1) / config_.batch_size; }

  /// Runs epochs until config.epochs have completed in total.
  TrainResult run(const TrainCallbacks& callbacks = {}) {
    open_outputs();
    std::vector<TrainRecord> records;
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&]() -> std::optional<double> {
      if (!config_.record_wall_time) return std::nullopt;
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    while (state_.epochs_completed < config_.epochs) {
      const std::size_t epoch = static_cast<std::size_t>(state_.epochs_completed) + 1;
      Rng rng(state_.rng_state);
      const auto batches = make_batches(samples_, config_.batch_size, rng);
      double loss_sum = 0.0, acc_sum = 0.0;
      std::string rows;
      for (std::size_t b = 0; b < batches.size(); ++b) {
        const auto [loss, acc] = step(batches[b], rng);
        TrainRecord r{Scope::Batch, epoch, b + 1, loss, acc, elapsed()};
        rows += to_csv_row(r) + "\n";
        records.push_back(r);
        if (callbacks.on_batch) callbacks.on_batch(r);
        loss_sum += loss;
        acc_sum += acc;
      }
      const auto n = static_cast<double>(batches.size());
      TrainRecord epoch_record{Scope::Epoch, epoch, std::nullopt, loss_sum / n, acc_sum / n, elapsed()};
      rows += to_csv_row(epoch_record) + "\n";
      records.push_back(epoch_record);
      metrics_ << rows << std::flush;
      write_histograms(epoch);

      state_.rng_state = rng.state();
      state_.epochs_completed = epoch;
      if (epoch % config_.checkpoint_every == 0 || epoch == config_.epochs) {
        save_checkpoint(config_.checkpoint_path, state_);
      }
      if (callbacks.on_epoch) callbacks.on_epoch(epoch_record);
    }
    return {state_.params, std::move(records), state_};
  }

 private:
  TrainingSession(const TrainConfig& config, Corpus corpus, Checkpoint state, bool resuming)
      : config_(config), corpus_(std::move(corpus)), state_(std::move(state)), resuming_(resuming) {
    samples_ = corpus_samples(corpus_, state_.scaling, state_.params.config.window);
    if (samples_.empty()) {
      fail(Errc::NoSamples, "every sequence is shorter than window + 1 = " +
                                std::to_string(state_.params.config.window + 1) + " notes");
    }
  }

  struct StepResult {
    double loss;
    double accuracy;
  };

  StepResult step(const Batch& batch, Rng& rng) {
    ModelParams& params = state_.params;
    auto fwd = model_forward(params, batch.inputs, Mode::Train, rng);
    auto loss = mse(fwd.predictions, batch.targets);
    if (!std::isfinite(loss.mse)) {
      fail(Errc::NonFiniteLoss, "loss became " + format_double(loss.mse) + " in epoch " +
                                    std::to_string(state_.epochs_completed + 1) + "; last good checkpoint kept");
    }
    const double acc = accuracy(fwd.predictions, batch.targets, state_.scaling);
    ParamGrads grads = model_backward(params, fwd.cache, loss.grad);
    if (config_.clip_norm) clip_global_norm(grads, *config_.clip_norm);
    rmsprop_step(params, grads, state_.optimizer);
    return {loss.mse, acc};
  }

  // Resuming appends to existing metrics files; a fresh run truncates them.
  void open_outputs() {
    auto open = [this](std::ofstream& out, const fs::path& path, std::string_view header) {
      const bool append = resuming_ && fs::exists(path);
      out.open(path, append ? std::ios::app : std::ios::trunc);
      if (!out) fail(Errc::Io, "cannot open " + path.string() + " for writing");
      if (!append) out << header << "\n";
    };
    open(metrics_, config_.metrics_path, kMetricsHeader);
    if (!config_.histogram_path.empty()) open(histograms_, config_.histogram_path, kHistogramHeader);
  }

  void write_histograms(std::size_t epoch) {
    if (!histograms_.is_open()) return;
    for_each_tensor(state_.params, [&](std::string_view name, const Tensor& t) {
      const auto s = summarize(t);
      histograms_ << epoch << "," << name << "," << format_double(s.min) << "," << format_double(s.max) << ","
                  << format_double(s.mean) << "," << format_double(s.std) << "\n";
    });
    histograms_.flush();
  }

  TrainConfig config_;
  Corpus corpus_;
  Checkpoint state_;
  bool resuming_;
  std::vector<Sample> samples_;
  std::ofstream metrics_;
  std::ofstream histograms_;
};

inline TrainResult train(const TrainConfig& config, const TrainCallbacks& callbacks = {}) {
  return TrainingSession::start(config).run(callbacks);
}

inline TrainResult resume_training(const TrainConfig& config, const TrainCallbacks& callbacks = {}) {
  return TrainingSession::resume(config, load_checkpoint(config.checkpoint_path)).run(callbacks);
}

}  // namespace notegen
