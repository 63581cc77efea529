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

// Shared test fixtures: random valid MIDI files, small synthetic pop songs,
// scratch directories and a central-difference gradient oracle.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "notegen/midi.hpp"

namespace notegen::testing_support {

namespace fs = std::filesystem;

inline midi::MidiEvent random_event(std::mt19937_64& gen) {
  using namespace midi;
  auto u = [&gen](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
  auto byte = [&](int lo, int hi) { return static_cast<std::uint8_t>(u(lo, hi)); };
  // Mostly short deltas, occasionally up to the VLQ limit.
  const std::uint32_t delta = u(0, 9) == 0 ? std::uniform_int_distribution<std::uint32_t>(0, kVlqLimit - 1)(gen)
                                           : static_cast<std::uint32_t>(u(0, 1000));
  switch (u(0, 5)) {
    case 0: return {delta, NoteOn{byte(0, 15), byte(0, 127), byte(1, 127)}};
    case 1: return {delta, NoteOff{byte(0, 15), byte(0, 127), byte(0, 127)}};
    case 2: return {delta, TempoChange{static_cast<std::uint32_t>(u(1, 0xFFFFFF))}};
    case 3: {
      std::uint8_t type = byte(0, 0x7F);
      if (type == kMetaTempo || type == kMetaEndOfTrack) type = 0x03;
      Bytes payload(static_cast<std::size_t>(u(0, 20)));
      for (auto& b : payload) b = byte(0, 255);
      return {delta, OtherMeta{type, payload}};
    }
    case 4: {
      const std::uint8_t status = static_cast<std::uint8_t>(u(0xA, 0xE) << 4 | u(0, 15));
      Bytes payload((status & 0xF0) == 0xC0 || (status & 0xF0) == 0xD0 ? 1 : 2);
      for (auto& b : payload) b = byte(0, 127);
      return {delta, OtherChannel{status, payload}};
    }
    default: {
      Bytes payload(static_cast<std::size_t>(u(0, 10)));
      for (auto& b : payload) b = byte(0, 255);
      return {delta, OtherChannel{static_cast<std::uint8_t>(u(0, 1) ? 0xF0 : 0xF7), payload}};
    }
  }
}

/// Any MidiFile that satisfies midi::validate.
inline midi::MidiFile random_midi_file(std::mt19937_64& gen) {
  auto u = [&gen](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
  midi::MidiFile f;
  f.format = static_cast<std::uint16_t>(u(0, 1));
  f.division = static_cast<std::uint16_t>(u(1, 0x7FFF));
  const int ntracks = f.format == 0 ? 1 : u(1, 4);
  for (int t = 0; t < ntracks; ++t) {
    midi::MidiTrack track;
    const int n = u(0, 40);
    for (int i = 0; i < n; ++i) track.push_back(random_event(gen));
    track.push_back(midi::end_of_track(static_cast<std::uint32_t>(u(0, 100))));
    f.tracks.push_back(std::move(track));
  }
  return f;
}

/// A small format-1 pop arrangement: a I-V-vi-IV block-chord track under a
/// motif-based eighth/quarter-note melody. Deterministic in `seed`.
inline midi::MidiFile pop_song(std::uint64_t seed, int bars = 16) {
  using namespace midi;
  std::mt19937_64 gen(seed);
  auto u = [&gen](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
  constexpr std::uint32_t q = 480;
  const int key = u(-5, 6);
  const std::array<int, 7> major{0, 2, 4, 5, 7, 9, 11};
  const std::array<int, 4> progression{0, 4, 5, 3};  // scale degrees I V vi IV
  auto degree_pitch = [&](int degree, int octave_base) {
    const int oct = degree / 7;
    return octave_base + key + 12 * oct + major[static_cast<std::size_t>(degree % 7)];
  };

  struct Note {
    std::uint32_t tick;
    int pitch;
    int velocity;
    std::uint32_t length;
  };
  std::vector<Note> chords, melody;
  for (int bar = 0; bar < bars; ++bar) {
    const int root = progression[static_cast<std::size_t>(bar % 4)];
    for (int half = 0; half < 2; ++half) {
      const std::uint32_t t = static_cast<std::uint32_t>(bar) * 4 * q + static_cast<std::uint32_t>(half) * 2 * q;
      for (int k = 0; k < 3; ++k) chords.push_back({t, degree_pitch(root + 2 * k, 48), half == 0 ? 72 : 64, 2 * q - 10});
    }
  }
  // Two 1-bar rhythmic motifs, alternated, with melody notes drawn from the
  // current chord so the line follows the harmony. Two 4-bar phrases A and B
  // are drawn once and laid out in AABB form.
  const std::vector<std::vector<std::uint32_t>> rhythms{{q, q / 2, q / 2, q, q}, {q / 2, q / 2, q / 2, q / 2, q, q}};
  std::array<std::array<std::array<int, 6>, 4>, 2> phrases{};
  for (auto& phrase : phrases) {
    for (auto& bar_tones : phrase) {
      for (std::size_t i = 0; i < bar_tones.size(); ++i) bar_tones[i] = 2 * u(0, 2) + (i % 2 == 1 ? u(0, 1) : 0);
    }
  }
  for (int bar = 0; bar < bars; ++bar) {
    const int root = progression[static_cast<std::size_t>(bar % 4)];
    const auto& rhythm = rhythms[static_cast<std::size_t>((bar / 2) % 2)];
    const auto& phrase = phrases[static_cast<std::size_t>((bar / 8) % 2)];
    std::uint32_t t = static_cast<std::uint32_t>(bar) * 4 * q;
    for (std::size_t i = 0; i < rhythm.size(); ++i) {
      const int tone = root + phrase[static_cast<std::size_t>(bar % 4)][i];
      const int vel = (t % (2 * q) == 0) ? 100 : 84;
      melody.push_back({t, degree_pitch(tone, 72), vel, rhythm[i] - 20});
      t += rhythm[i];
    }
  }

  auto to_track = [](const std::vector<Note>& notes, std::uint8_t channel) {
    struct Timed {
      std::uint32_t tick;
      int order;
      EventKind kind;
    };
    std::vector<Timed> timed;
    for (const auto& n : notes) {
      timed.push_back({n.tick, 1, NoteOn{channel, static_cast<std::uint8_t>(n.pitch), static_cast<std::uint8_t>(n.velocity)}});
      timed.push_back({n.tick + n.length, 0, NoteOff{channel, static_cast<std::uint8_t>(n.pitch), 0}});
    }
    std::stable_sort(timed.begin(), timed.end(),
                     [](const Timed& a, const Timed& b) { return a.tick != b.tick ? a.tick < b.tick : a.order < b.order; });
    MidiTrack track;
    std::uint32_t last = 0;
    for (auto& e : timed) {
      track.push_back({e.tick - last, std::move(e.kind)});
      last = e.tick;
    }
    track.push_back(end_of_track());
    return track;
  };

  MidiFile f{1, q, {}};
  f.tracks.push_back({{0, TempoChange{static_cast<std::uint32_t>(60'000'000 / u(96, 128))}},
                      {0, OtherMeta{0x03, {'p', 'o', 'p'}}},
                      end_of_track()});
  f.tracks.push_back(to_track(melody, 0));
  f.tracks.push_back(to_track(chords, 1));
  return f;
}

/// Single-track melody of exactly `notes` onsets: a repeating 8-note motif
/// transposed every two repeats, quarter and eighth durations.
inline midi::MidiFile melody_file(int notes = 60, std::uint16_t division = 480) {
  using namespace midi;
  const std::uint32_t q = division;
  const std::uint32_t e = q / 2;
  const std::uint32_t gap = std::max<std::uint32_t>(1, q / 48);
  const std::array<int, 8> motif{0, 4, 7, 4, 5, 9, 7, 2};
  const std::array<std::uint32_t, 8> rhythm{q, e, e, q, e, e, q, q};
  const std::array<int, 4> shifts{0, 5, 7, 3};
  MidiTrack track{{0, TempoChange{500000}}};
  std::uint32_t pending = 0;
  for (int i = 0; i < notes; ++i) {
    const auto k = static_cast<std::size_t>(i % 8);
    const int pitch = 60 + motif[k] + shifts[static_cast<std::size_t>((i / 16) % 4)];
    const auto vel = static_cast<std::uint8_t>(k % 4 == 0 ? 100 : 80);
    track.push_back({pending, NoteOn{0, static_cast<std::uint8_t>(pitch), vel}});
    track.push_back({rhythm[k] - gap, NoteOff{0, static_cast<std::uint8_t>(pitch), 0}});
    pending = gap;
  }
  track.push_back(end_of_track());
  return MidiFile{0, division, {std::move(track)}};
}

inline void write_bytes(const fs::path& path, const midi::Bytes& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("notegen_" + tag + "_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// Writes pop_song(seed_base + i) for i in [0, count) into dir.
inline void write_pop_corpus(const fs::path& dir, int count, std::uint64_t seed_base = 11, int bars = 16) {
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    write_bytes(dir / ("song" + std::to_string(i) + ".mid"),
                midi::write_midi(pop_song(seed_base + static_cast<std::uint64_t>(i), bars)));
  }
}

}  // namespace notegen::testing_support
