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

// Greedy autoregressive continuation. The model is a regressor, so each step
// takes its prediction as-is (clamped to [0,1]); there is no sampling.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "notegen/checkpoint.hpp"
#include "notegen/error.hpp"
#include "notegen/model.hpp"
#include "notegen/note_matrix.hpp"
#include "notegen/trainer.hpp"

namespace notegen {

struct GenerateConfig {
  fs::path checkpoint_path;
  std::optional<fs::path> seed_midi;  // unset: random seed window
  std::uint64_t rng_seed = 0;
  std::size_t length = 100;
  std::optional<std::uint32_t> note_duration_ticks;  // unset: division / 2
  fs::path output_path;

  void validate() const {
    if (length == 0) fail(Errc::InvalidConfig, "length must be >= 1");
    if (note_duration_ticks && *note_duration_ticks == 0) fail(Errc::InvalidConfig, "note duration must be >= 1 tick");
  }
};

struct Generation {
  Tensor scaled;     // [length, 3], clamped model outputs in generation order
  NoteMatrix notes;  // unscaled, in generation order
};

/// First `window` scaled rows of the file's Note Matrix.
inline Tensor seed_window_from_midi(const midi::MidiFile& file, const ScalingParams& scaling, std::size_t window) {
  const NoteMatrix m = matrix_from_midi(file);
  if (m.rows.size() < window) {
    fail(Errc::SeedTooShort, "seed has " + std::to_string(m.rows.size()) + " notes, window needs " + std::to_string(window));
  }
  NoteMatrix head{{m.rows.begin(), m.rows.begin() + static_cast<std::ptrdiff_t>(window)}, m.division};
  return scale(head, scaling);
}

inline Tensor random_seed_window(Rng& rng, std::size_t window) {
  Tensor t({window, kFeatures});
  for (double& v : t.data()) v = rng.uniform();
  return t;
}

inline Generation generate(const ModelParams& params, const ScalingParams& scaling, std::uint16_t division,
                           const Tensor& seed_window, std::size_t length) {
  const std::size_t window = params.config.window;
  if (length == 0) fail(Errc::InvalidConfig, "length must be >= 1");
  if (seed_window.shape() != Shape{window, kFeatures}) {
    fail(Errc::SeedTooShort, "seed window must be [" + std::to_string(window) + ", 3], got " +
                                 shape_string(seed_window.shape()));
  }
  // Rolling buffer: seed rows followed by generated rows.
  Tensor history({window + length, kFeatures});
  std::copy(seed_window.data().begin(), seed_window.data().end(), history.data().begin());
  Tensor input({1, window, kFeatures});
  for (std::size_t k = 0; k < length; ++k) {
    std::copy_n(history.row(k).begin(), window * kFeatures, input.data().begin());
    const Tensor next = predict(params, input);
    auto out = history.row(window + k);
    for (std::size_t j = 0; j < kFeatures; ++j) out[j] = std::isnan(next[j]) ? 0.0 : std::clamp(next[j], 0.0, 1.0);
  }

  Generation g{Tensor({length, kFeatures}), NoteMatrix{{}, division}};
  std::copy(history.data().begin() + static_cast<std::ptrdiff_t>(window * kFeatures), history.data().end(),
            g.scaled.data().begin());
  g.notes.rows.reserve(length);
  for (std::size_t k = 0; k < length; ++k) g.notes.rows.push_back(unscale(g.scaled.row(k), scaling));
  return g;
}

inline std::uint32_t default_note_duration(std::uint16_t division) { return std::max<std::uint32_t>(1, division / 2u); }

/// Writes the canonical form of `notes` and returns it; reading the file
/// back yields exactly the returned matrix.
inline NoteMatrix export_midi(const NoteMatrix& notes, const fs::path& path, std::uint32_t note_duration_ticks) {
  NoteMatrix written = canonical_form(notes);
  write_midi_file(path, matrix_to_midi(written, written.division, note_duration_ticks));
  return written;
}

/// Load checkpoint, build the seed window, generate, write the MIDI file.
inline Generation run_generation(const GenerateConfig& config) {
  config.validate();
  const Checkpoint ckpt = load_checkpoint(config.checkpoint_path);
  const std::size_t window = ckpt.params.config.window;
  Tensor seed;
  if (config.seed_midi) {
    seed = seed_window_from_midi(read_midi_file(*config.seed_midi), ckpt.scaling, window);
  } else {
    Rng rng(config.rng_seed);
    seed = random_seed_window(rng, window);
  }
  Generation g = generate(ckpt.params, ckpt.scaling, ckpt.division, seed, config.length);
  export_midi(g.notes, config.output_path, config.note_duration_ticks.value_or(default_note_duration(ckpt.division)));
  return g;
}

}  // namespace notegen
