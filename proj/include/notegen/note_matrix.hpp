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

// Note Matrix: one (pitch, velocity, inter-onset ticks) row per note onset,
// plus the (0,1) scaling, windowing and batching that feed the model.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "notegen/error.hpp"
#include "notegen/midi.hpp"
#include "notegen/rng.hpp"
#include "notegen/tensor.hpp"

namespace notegen {

inline constexpr std::size_t kFeatures = 3;

struct NoteRow {
  int pitch = 0;
  int velocity = 1;
  std::uint64_t dt_ticks = 0;
  bool operator==(const NoteRow&) const = default;
};

struct NoteMatrix {
  std::vector<NoteRow> rows;
  std::uint16_t division = 480;
  bool operator==(const NoteMatrix&) const = default;
};

/// Pitch and velocity divide by their full MIDI range; time divides by the
/// largest inter-onset interval seen in the corpus.
struct ScalingParams {
  static constexpr double kPitchDivisor = 127.0;
  static constexpr double kVelocityDivisor = 127.0;
  std::uint64_t dt_max_ticks = 1;
  bool operator==(const ScalingParams&) const = default;
};

struct Sample {
  Tensor input;   // [window, 3]
  Tensor target;  // [3]
};

struct Batch {
  Tensor inputs;   // [batch, window, 3]
  Tensor targets;  // [batch, 3]
};

inline void validate_row(const NoteRow& r) {
  if (r.pitch < 0 || r.pitch > 127) fail(Errc::InvariantViolation, "pitch " + std::to_string(r.pitch) + " out of range");
  if (r.velocity < 1 || r.velocity > 127) {
    fail(Errc::InvariantViolation, "velocity " + std::to_string(r.velocity) + " out of range");
  }
}

inline NoteMatrix events_to_matrix(const std::vector<midi::AbsoluteNoteEvent>& events, std::uint16_t division) {
  NoteMatrix m;
  m.division = division;
  m.rows.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::uint64_t dt = i == 0 ? 0 : events[i].tick - events[i - 1].tick;
    m.rows.push_back({events[i].pitch, events[i].velocity, dt});
  }
  return m;
}

inline ScalingParams fit_scaling(const std::vector<NoteMatrix>& corpus) {
  bool any = false;
  ScalingParams p;
  for (const auto& m : corpus) {
    for (const auto& r : m.rows) {
      any = true;
      p.dt_max_ticks = std::max(p.dt_max_ticks, r.dt_ticks);
    }
  }
  if (!any) fail(Errc::EmptyCorpus, "no note rows to fit scaling on");
  return p;
}

inline std::array<double, kFeatures> scale_row(const NoteRow& r, const ScalingParams& p) {
  const auto dt_max = static_cast<double>(p.dt_max_ticks);
  return {r.pitch / ScalingParams::kPitchDivisor, r.velocity / ScalingParams::kVelocityDivisor,
          static_cast<double>(std::min(r.dt_ticks, p.dt_max_ticks)) / dt_max};
}

/// [T, 3] with every entry in [0, 1].
inline Tensor scale(const NoteMatrix& m, const ScalingParams& p) {
  Tensor out({m.rows.size(), kFeatures});
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const auto s = scale_row(m.rows[i], p);
    std::copy(s.begin(), s.end(), out.row(i).begin());
  }
  return out;
}

inline NoteRow unscale(std::span<const double> row, const ScalingParams& p) {
  if (row.size() != kFeatures) fail(Errc::ShapeMismatch, "unscale expects 3 values");
  auto clamp01 = [](double x) { return std::isnan(x) ? 0.0 : std::clamp(x, 0.0, 1.0); };
  NoteRow r;
  r.pitch = static_cast<int>(std::lround(clamp01(row[0]) * ScalingParams::kPitchDivisor));
  r.velocity = std::max(1, static_cast<int>(std::lround(clamp01(row[1]) * ScalingParams::kVelocityDivisor)));
  r.dt_ticks = static_cast<std::uint64_t>(std::llround(clamp01(row[2]) * static_cast<double>(p.dt_max_ticks)));
  return r;
}

inline NoteRow unscale(const Tensor& row, const ScalingParams& p) { return unscale(row.data(), p); }

/// Sliding windows: sample i reads rows [i, i + window) and predicts row i + window.
inline std::vector<Sample> make_samples(const Tensor& scaled, std::size_t window) {
  if (window == 0) fail(Errc::InvalidConfig, "window must be >= 1");
  if (scaled.rank() != 2 || scaled.dim(1) != kFeatures) {
    fail(Errc::ShapeMismatch, "make_samples expects [T, 3], got " + shape_string(scaled.shape()));
  }
  const std::size_t t = scaled.dim(0);
  std::vector<Sample> samples;
  if (t <= window) return samples;
  samples.reserve(t - window);
  for (std::size_t i = 0; i + window < t; ++i) {
    Sample s{Tensor({window, kFeatures}), Tensor({kFeatures})};
    std::copy_n(scaled.row(i).begin(), window * kFeatures, s.input.data().begin());
    std::copy_n(scaled.row(i + window).begin(), kFeatures, s.target.data().begin());
    samples.push_back(std::move(s));
  }
  return samples;
}

/// Stacks the given samples (in order) into one batch.
inline Batch stack(const std::vector<Sample>& samples, std::span<const std::size_t> order) {
  if (order.empty()) fail(Errc::InvalidConfig, "cannot stack an empty batch");
  const std::size_t window = samples[order[0]].input.dim(0);
  Batch b{Tensor({order.size(), window, kFeatures}), Tensor({order.size(), kFeatures})};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Sample& s = samples[order[i]];
    if (s.input.dim(0) != window) fail(Errc::ShapeMismatch, "samples with different windows in one batch");
    std::copy(s.input.data().begin(), s.input.data().end(), b.inputs.data().begin() + i * window * kFeatures);
    std::copy(s.target.data().begin(), s.target.data().end(), b.targets.row(i).begin());
  }
  return b;
}

/// Fisher-Yates permutation of [0, n) driven by rng.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

/// Shuffles once, then cuts consecutive batches; the last one may be short.
inline std::vector<Batch> make_batches(const std::vector<Sample>& samples, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) fail(Errc::InvalidConfig, "batch_size must be >= 1");
  const auto order = shuffled_indices(samples.size(), rng);
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, order.size() - start);
    batches.push_back(stack(samples, std::span<const std::size_t>(order).subspan(start, n)));
  }
  return batches;
}

/// Orders each group of simultaneous onsets by ascending pitch, the order
/// merge_tracks reports them in. The group's leading dt stays in front.
inline void canonicalize_chords(NoteMatrix& m) {
  std::size_t start = 0;
  while (start < m.rows.size()) {
    std::size_t end = start + 1;
    while (end < m.rows.size() && m.rows[end].dt_ticks == 0) ++end;
    const std::uint64_t lead_dt = m.rows[start].dt_ticks;
    std::stable_sort(m.rows.begin() + static_cast<std::ptrdiff_t>(start), m.rows.begin() + static_cast<std::ptrdiff_t>(end),
                     [](const NoteRow& a, const NoteRow& b) { return a.pitch < b.pitch; });
    for (std::size_t i = start; i < end; ++i) m.rows[i].dt_ticks = i == start ? lead_dt : 0;
    start = end;
  }
}

/// The form matrix_from_midi(matrix_to_midi(m)) reproduces: first onset at
/// dt 0, simultaneous onsets in pitch order.
inline NoteMatrix canonical_form(NoteMatrix m) {
  if (!m.rows.empty()) m.rows.front().dt_ticks = 0;
  canonicalize_chords(m);
  return m;
}

/// Format-0 file: NoteOn at each cumulative onset, NoteOff note_duration_ticks
/// later, tempo 500000. Offs sort before ons at equal ticks so a re-struck
/// pitch is not cut short.
inline midi::MidiFile matrix_to_midi(const NoteMatrix& m, std::uint16_t division, std::uint32_t note_duration_ticks,
                                     std::uint32_t tempo = midi::kDefaultTempo) {
  struct Timed {
    std::uint64_t tick;
    int order;  // 0 = off, 1 = on
    midi::EventKind kind;
  };
  std::vector<Timed> timed;
  timed.reserve(2 * m.rows.size());
  std::uint64_t tick = 0;
  for (const auto& r : m.rows) {
    validate_row(r);
    tick += r.dt_ticks;
    const auto pitch = static_cast<std::uint8_t>(r.pitch);
    timed.push_back({tick, 1, midi::NoteOn{0, pitch, static_cast<std::uint8_t>(r.velocity)}});
    timed.push_back({tick + note_duration_ticks, 0, midi::NoteOff{0, pitch, 0}});
  }
  std::stable_sort(timed.begin(), timed.end(),
                   [](const Timed& a, const Timed& b) { return a.tick != b.tick ? a.tick < b.tick : a.order < b.order; });

  midi::MidiTrack track;
  track.push_back({0, midi::TempoChange{tempo}});
  std::uint64_t last = 0;
  for (auto& t : timed) {
    const std::uint64_t delta = t.tick - last;
    if (delta >= midi::kVlqLimit) fail(Errc::InvariantViolation, "delta between notes exceeds 2^28 ticks");
    track.push_back({static_cast<std::uint32_t>(delta), std::move(t.kind)});
    last = t.tick;
  }
  track.push_back(midi::end_of_track());
  return midi::MidiFile{0, division, {std::move(track)}};
}

/// Parse -> merge -> Note Matrix in one step.
inline NoteMatrix matrix_from_midi(const midi::MidiFile& f) { return events_to_matrix(midi::merge_tracks(f).notes, f.division); }

}  // namespace notegen
