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

// notegen command line: train, generate, inspect.
//
// Exit status: 0 success, 1 pipeline error (diagnostic on stderr), 2 usage
// error. Each subcommand accepts --config FILE with key=value lines using
// the long flag names; flags given on the command line win over the file.

#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "notegen/generator.hpp"
#include "notegen/midi.hpp"
#include "notegen/trainer.hpp"

namespace notegen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline std::string dt_bucket(std::uint64_t dt, std::uint16_t division) {
  if (dt == 0) return "0";
  const double beats = static_cast<double>(dt) / division;
  if (beats <= 0.25) return "<=1/4";
  if (beats <= 0.5) return "<=1/2";
  if (beats <= 1.0) return "<=1";
  if (beats <= 2.0) return "<=2";
  return ">2";
}

inline void print_inspect(const midi::MidiFile& file, std::ostream& out) {
  const auto merged = midi::merge_tracks(file);
  const auto matrix = events_to_matrix(merged.notes, file.division);
  out << "format: " << file.format << "\n";
  out << "division: " << file.division << "\n";
  out << "tracks: " << file.tracks.size() << "\n";
  out << "notes: " << matrix.rows.size() << "\n";
  out << "tempo: " << merged.initial_tempo << "\n";
  if (matrix.rows.empty()) {
    out << "pitch range: -\n";
    return;
  }
  const auto [lo, hi] = std::minmax_element(matrix.rows.begin(), matrix.rows.end(),
                                            [](const NoteRow& a, const NoteRow& b) { return a.pitch < b.pitch; });
  out << "pitch range: " << lo->pitch << "-" << hi->pitch << "\n";
  std::vector<std::uint64_t> dts;
  for (const auto& r : matrix.rows) dts.push_back(r.dt_ticks);
  std::sort(dts.begin(), dts.end());
  out << "dt ticks: min " << dts.front() << ", median " << dts[dts.size() / 2] << ", max " << dts.back() << "\n";
  static const char* kOrder[] = {"0", "<=1/4", "<=1/2", "<=1", "<=2", ">2"};
  std::map<std::string, std::size_t> buckets;
  for (auto dt : dts) ++buckets[dt_bucket(dt, file.division)];
  out << "dt histogram (beats):";
  for (const char* key : kOrder) out << " " << key << ":" << buckets[key];
  out << "\n";
}

/// Runs one invocation; argv[0] is the program name.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"notegen: LSTM note-sequence training and MIDI generation"};
  app.require_subcommand(1);
  app.fallthrough(true);
  app.set_config("--config", "", "INI/TOML file; [train] and [generate] sections supply defaults for long flags");
  app.allow_config_extras(CLI::config_extras_mode::error);

  // train
  TrainConfig train_cfg;
  std::string data_dir, checkpoint_out = "model.ngckpt", metrics_out = "metrics.csv", histograms_out;
  double clip = 5.0;
  bool no_clip = false, resume = false, quiet = false;
  auto* train = app.add_subcommand("train", "Train on a directory of MIDI files");
  train->add_option("--data", data_dir, "Directory of .mid files")->required();
  train->add_option("--epochs", train_cfg.epochs, "Total epochs")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--window", train_cfg.window, "Context window in notes")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--hidden", train_cfg.hidden, "LSTM units")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--dropout", train_cfg.dropout_rate, "Dropout rate after the LSTM")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.999999));
  train->add_option("--lr", train_cfg.lr, "RMSprop learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--rho", train_cfg.rho, "RMSprop decay")->capture_default_str()->check(CLI::Range(0.0, 0.999999));
  train->add_option("--epsilon", train_cfg.epsilon, "RMSprop epsilon")->capture_default_str()->check(CLI::NonNegativeNumber);
  train->add_option("--batch", train_cfg.batch_size, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--seed", train_cfg.seed, "RNG seed")->capture_default_str();
  train->add_option("--clip", clip, "Global gradient-norm clip")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_flag("--no-clip", no_clip, "Disable gradient clipping");
  train->add_option("--out", checkpoint_out, "Checkpoint path")->capture_default_str();
  train->add_option("--metrics", metrics_out, "Metrics CSV path")->capture_default_str();
  train->add_option("--histograms", histograms_out, "Per-epoch weight summary CSV (off when empty)");
  train->add_option("--checkpoint-every", train_cfg.checkpoint_every, "Epochs between checkpoints")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_flag("--resume", resume, "Continue from the checkpoint at --out");
  train->add_flag("--record-time", train_cfg.record_wall_time, "Fill the wall_seconds metrics column");
  train->add_flag("--quiet", quiet, "Suppress per-epoch progress lines");

  // generate
  GenerateConfig gen_cfg;
  std::string model_path, gen_out, seed_midi;
  std::optional<std::uint64_t> random_seed;
  std::optional<std::uint32_t> duration;
  auto* generate_cmd = app.add_subcommand("generate", "Continue a seed with a trained model and write MIDI");
  generate_cmd->add_option("--model", model_path, "Checkpoint written by train")->required();
  generate_cmd->add_option("--out", gen_out, "Output .mid path")->required();
  auto* seed_opt = generate_cmd->add_option("--seed-midi", seed_midi, "Seed from the first window notes of this file");
  auto* random_opt = generate_cmd->add_option("--random-seed", random_seed, "Seed from uniform random rows");
  seed_opt->excludes(random_opt);
  generate_cmd->add_option("--length", gen_cfg.length, "Notes to generate")->capture_default_str()->check(CLI::PositiveNumber);
  generate_cmd->add_option("--duration", duration, "Note length in ticks (default division/2)")->check(CLI::PositiveNumber);

  // inspect
  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Summarize a MIDI file");
  inspect->add_option("file", inspect_path, "MIDI file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub != nullptr ? sub->help() : app.help());
    return kExitUsage;
  }

  try {
    if (train->parsed()) {
      train_cfg.corpus_dir = data_dir;
      train_cfg.clip_norm = no_clip ? std::nullopt : std::optional<double>(clip);
      train_cfg.checkpoint_path = checkpoint_out;
      train_cfg.metrics_path = metrics_out;
      train_cfg.histogram_path = histograms_out;
      TrainCallbacks callbacks;
      if (!quiet) {
        callbacks.on_epoch = [&out, &train_cfg](const TrainRecord& r) {
          char line[128];
          std::snprintf(line, sizeof line, "epoch %zu/%zu loss %.6g accuracy %.4f", r.epoch, train_cfg.epochs, r.loss,
                        r.accuracy);
          out << line << "\n" << std::flush;
        };
      }
      auto session = resume ? TrainingSession::resume(train_cfg, load_checkpoint(train_cfg.checkpoint_path))
                            : TrainingSession::start(train_cfg);
      for (const auto& w : session.corpus().warnings) err << "warning: " << w << "\n";
      out << "corpus: " << session.corpus().files.size() << " files, " << session.sample_count() << " samples, "
          << session.batches_per_epoch() << " batches/epoch\n";
      session.run(callbacks);
      out << "checkpoint: " << train_cfg.checkpoint_path.string() << "\n";
      out << "metrics: " << train_cfg.metrics_path.string() << "\n";
      return kExitOk;
    }

    if (generate_cmd->parsed()) {
      gen_cfg.checkpoint_path = model_path;
      gen_cfg.output_path = gen_out;
      if (!seed_midi.empty()) gen_cfg.seed_midi = fs::path(seed_midi);
      gen_cfg.rng_seed = random_seed.value_or(0);
      gen_cfg.note_duration_ticks = duration;
      const Generation g = run_generation(gen_cfg);
      out << "notes: " << g.notes.rows.size() << "\n";
      out << "output: " << gen_cfg.output_path.string() << "\n";
      return kExitOk;
    }

    if (inspect->parsed()) {
      print_inspect(read_midi_file(inspect_path), out);
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::InvalidConfig ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace notegen::cli
