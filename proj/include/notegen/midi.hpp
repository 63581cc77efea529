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

// Standard MIDI File (format 0 and 1) reader and writer.
//
// Parsing accepts running status; writing never emits it. NoteOn with
// velocity 0 is normalized to NoteOff on parse, so parse(write(f)) == f
// holds for every file that satisfies validate().

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "notegen/error.hpp"

namespace notegen::midi {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kVlqLimit = 1u << 28;
inline constexpr std::uint32_t kDefaultTempo = 500000;
inline constexpr std::uint8_t kMetaEndOfTrack = 0x2F;
inline constexpr std::uint8_t kMetaTempo = 0x51;

struct NoteOn {
  std::uint8_t channel = 0;
  std::uint8_t pitch = 0;
  std::uint8_t velocity = 0;
  bool operator==(const NoteOn&) const = default;
};

struct NoteOff {
  std::uint8_t channel = 0;
  std::uint8_t pitch = 0;
  std::uint8_t velocity = 0;
  bool operator==(const NoteOff&) const = default;
};

struct TempoChange {
  std::uint32_t us_per_quarter = kDefaultTempo;
  bool operator==(const TempoChange&) const = default;
};

// End-of-Track is an OtherMeta with type 0x2F and an empty payload.
struct OtherMeta {
  std::uint8_t type = 0;
  Bytes payload;
  bool operator==(const OtherMeta&) const = default;
};

// Channel messages other than note on/off (status 0xA0-0xEF, payload = data
// bytes) and sysex (status 0xF0/0xF7, payload = the length-prefixed body).
struct OtherChannel {
  std::uint8_t status = 0;
  Bytes payload;
  bool operator==(const OtherChannel&) const = default;
};

using EventKind = std::variant<NoteOn, NoteOff, TempoChange, OtherMeta, OtherChannel>;

struct MidiEvent {
  std::uint32_t delta_ticks = 0;
  EventKind kind;
  bool operator==(const MidiEvent&) const = default;
};

inline MidiEvent end_of_track(std::uint32_t delta = 0) {
  return {delta, OtherMeta{kMetaEndOfTrack, {}}};
}

inline bool is_end_of_track(const MidiEvent& e) {
  const auto* meta = std::get_if<OtherMeta>(&e.kind);
  return meta != nullptr && meta->type == kMetaEndOfTrack;
}

using MidiTrack = std::vector<MidiEvent>;

struct MidiFile {
  std::uint16_t format = 0;
  std::uint16_t division = 480;
  std::vector<MidiTrack> tracks;
  bool operator==(const MidiFile&) const = default;
};

struct AbsoluteNoteEvent {
  std::uint64_t tick = 0;
  std::uint8_t pitch = 0;
  std::uint8_t velocity = 1;
  bool operator==(const AbsoluteNoteEvent&) const = default;
};

struct MergedNotes {
  std::vector<AbsoluteNoteEvent> notes;
  std::uint32_t initial_tempo = kDefaultTempo;
};

// ---------------------------------------------------------------------------
// Variable-length quantities

struct VlqResult {
  std::uint32_t value = 0;
  std::size_t consumed = 0;
};

inline VlqResult decode_vlq(std::span<const std::uint8_t> bytes) {
  std::uint32_t value = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i >= bytes.size()) fail(Errc::TruncatedInput, "VLQ runs past end of input");
    const std::uint8_t b = bytes[i];
    value = (value << 7) | (b & 0x7Fu);
    if ((b & 0x80u) == 0) return {value, i + 1};
  }
  fail(Errc::UnterminatedVlq, "VLQ longer than 4 bytes");
}

inline Bytes encode_vlq(std::uint32_t value) {
  if (value >= kVlqLimit) fail(Errc::ValueTooLarge, "VLQ value " + std::to_string(value) + " >= 2^28");
  std::uint8_t groups[4];
  std::size_t n = 0;
  do {
    groups[n++] = static_cast<std::uint8_t>(value & 0x7Fu);
    value >>= 7;
  } while (value != 0);
  Bytes out;
  out.reserve(n);
  for (std::size_t i = n; i-- > 0;) {
    out.push_back(static_cast<std::uint8_t>(groups[i] | (i > 0 ? 0x80u : 0u)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

// Number of data bytes following a channel status byte (0x80-0xEF).
constexpr std::size_t channel_data_length(std::uint8_t status) {
  switch (status & 0xF0u) {
    case 0xC0:
    case 0xD0: return 1;
    default: return 2;
  }
}

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(Errc::InvariantViolation, what);
}

}  // namespace detail

inline void validate_event(const MidiEvent& e) {
  using detail::require;
  require(e.delta_ticks < kVlqLimit, "delta_ticks >= 2^28");
  std::visit(
      [](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, NoteOn> || std::is_same_v<K, NoteOff>) {
          require(k.channel <= 15, "channel out of range");
          require(k.pitch <= 127, "pitch out of range");
          require(k.velocity <= 127, "velocity out of range");
          if constexpr (std::is_same_v<K, NoteOn>) {
            require(k.velocity > 0, "NoteOn with velocity 0 must be a NoteOff");
          }
        } else if constexpr (std::is_same_v<K, TempoChange>) {
          require(k.us_per_quarter > 0 && k.us_per_quarter <= 0xFFFFFFu, "tempo out of range");
        } else if constexpr (std::is_same_v<K, OtherMeta>) {
          require(k.type < 0x80, "meta type must be < 0x80");
          const bool tempo_shaped = k.type == kMetaTempo && k.payload.size() == 3 &&
                                    (k.payload[0] | k.payload[1] | k.payload[2]) != 0;
          require(!tempo_shaped, "well-formed tempo meta must be a TempoChange");
          require(k.payload.size() < kVlqLimit, "meta payload too large");
          if (k.type == kMetaEndOfTrack) require(k.payload.empty(), "End-of-Track carries a payload");
        } else {
          if (k.status == 0xF0 || k.status == 0xF7) {
            require(k.payload.size() < kVlqLimit, "sysex payload too large");
          } else {
            require(k.status >= 0xA0 && k.status <= 0xEF, "OtherChannel status must be 0xA0-0xEF, 0xF0 or 0xF7");
            require(k.payload.size() == detail::channel_data_length(k.status), "wrong channel data length");
            for (auto b : k.payload) require(b < 0x80, "channel data byte >= 0x80");
          }
        }
      },
      e.kind);
}

inline void validate(const MidiFile& f) {
  using detail::require;
  require(f.format == 0 || f.format == 1, "format must be 0 or 1");
  require(f.format != 0 || f.tracks.size() == 1, "format 0 needs exactly one track");
  require(f.division > 0 && f.division < 0x8000, "division must be in [1, 32767]");
  require(f.tracks.size() <= 0xFFFF, "too many tracks");
  for (const auto& track : f.tracks) {
    require(!track.empty() && is_end_of_track(track.back()), "track must end with End-of-Track");
    for (std::size_t i = 0; i < track.size(); ++i) {
      validate_event(track[i]);
      require(i + 1 == track.size() || !is_end_of_track(track[i]), "End-of-Track before end of track");
    }
  }
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Cursor {
 public:
  Cursor(std::span<const std::uint8_t> bytes, Errc on_short) : bytes_(bytes), on_short_(on_short) {}

  bool done() const { return pos_ >= bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint8_t peek() const {
    if (done()) fail(on_short_, "unexpected end of data");
    return bytes_[pos_];
  }
  std::uint8_t u8() {
    std::uint8_t b = peek();
    ++pos_;
    return b;
  }
  std::uint16_t u16() {
    std::uint16_t hi = u8();
    return static_cast<std::uint16_t>((hi << 8) | u8());
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
    return v;
  }
  std::uint32_t vlq() {
    try {
      auto r = decode_vlq(bytes_.subspan(pos_));
      pos_ += r.consumed;
      return r.value;
    } catch (const Error& e) {
      if (e.code() == Errc::TruncatedInput) fail(on_short_, "VLQ runs past end of data");
      throw;
    }
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) fail(on_short_, "field runs past end of data");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  Errc on_short_;
};

inline MidiTrack parse_track(std::span<const std::uint8_t> chunk) {
  Cursor in(chunk, Errc::TruncatedChunk);
  MidiTrack track;
  std::uint8_t running = 0;
  while (!in.done()) {
    const std::uint32_t delta = in.vlq();
    std::uint8_t status = in.peek();
    if (status & 0x80u) {
      in.u8();
    } else {
      if (running == 0) fail(Errc::BadEventStatus, "data byte without running status");
      status = running;
    }

    if (status == 0xFF) {
      const std::uint8_t type = in.u8();
      if (type & 0x80u) fail(Errc::BadEventStatus, "meta type byte >= 0x80");
      const std::uint32_t len = in.vlq();
      auto payload = in.take(len);
      if (type == kMetaEndOfTrack) {
        track.push_back(end_of_track(delta));
        return track;
      }
      if (type == kMetaTempo && len == 3) {
        const std::uint32_t tempo = (std::uint32_t{payload[0]} << 16) | (std::uint32_t{payload[1]} << 8) | payload[2];
        if (tempo > 0) {
          track.push_back({delta, TempoChange{tempo}});
          continue;
        }
      }
      // malformed tempo metas survive as raw payload
      track.push_back({delta, OtherMeta{type, Bytes(payload.begin(), payload.end())}});
    } else if (status == 0xF0 || status == 0xF7) {
      running = 0;
      const std::uint32_t len = in.vlq();
      auto payload = in.take(len);
      track.push_back({delta, OtherChannel{status, Bytes(payload.begin(), payload.end())}});
    } else if (status >= 0xF1) {
      fail(Errc::BadEventStatus, "system common/real-time status in file");
    } else {
      running = status;
      const std::size_t n = channel_data_length(status);
      auto data = in.take(n);
      for (auto b : data) {
        if (b & 0x80u) fail(Errc::BadEventStatus, "channel data byte >= 0x80");
      }
      const auto channel = static_cast<std::uint8_t>(status & 0x0Fu);
      switch (status & 0xF0u) {
        case 0x80: track.push_back({delta, NoteOff{channel, data[0], data[1]}}); break;
        case 0x90:
          if (data[1] == 0) {
            track.push_back({delta, NoteOff{channel, data[0], 0}});
          } else {
            track.push_back({delta, NoteOn{channel, data[0], data[1]}});
          }
          break;
        default: track.push_back({delta, OtherChannel{status, Bytes(data.begin(), data.end())}}); break;
      }
    }
  }
  // Tolerate a missing End-of-Track.
  track.push_back(end_of_track());
  return track;
}

}  // namespace detail

inline MidiFile parse_midi(std::span<const std::uint8_t> bytes) {
  detail::Cursor in(bytes, Errc::TruncatedChunk);
  if (bytes.size() < 14) fail(Errc::BadHeader, "input shorter than an MThd chunk");
  auto tag = in.take(4);
  if (!std::equal(tag.begin(), tag.end(), "MThd")) fail(Errc::BadHeader, "missing MThd tag");
  const std::uint32_t header_len = in.u32();
  if (header_len < 6) fail(Errc::BadHeader, "MThd length < 6");
  if (header_len > in.remaining()) fail(Errc::BadHeader, "MThd length exceeds input");
  detail::Cursor header(in.take(header_len), Errc::BadHeader);

  MidiFile file;
  file.format = header.u16();
  const std::uint16_t ntracks = header.u16();
  const std::uint16_t division = header.u16();
  if (file.format == 2) fail(Errc::UnsupportedFormat, "format 2 files are not supported");
  if (file.format > 2) fail(Errc::BadHeader, "unknown format " + std::to_string(file.format));
  if (division & 0x8000u) fail(Errc::SmpteDivisionUnsupported, "SMPTE time division");
  if (division == 0) fail(Errc::BadHeader, "division is zero");
  if (file.format == 0 && ntracks != 1) fail(Errc::BadHeader, "format 0 declares " + std::to_string(ntracks) + " tracks");
  file.division = division;

  while (file.tracks.size() < ntracks) {
    if (in.remaining() < 8) fail(Errc::TruncatedChunk, "missing track chunk");
    auto chunk_tag = in.take(4);
    const std::uint32_t len = in.u32();
    if (len > in.remaining()) fail(Errc::TruncatedChunk, "chunk length exceeds input");
    auto body = in.take(len);
    if (std::equal(chunk_tag.begin(), chunk_tag.end(), "MTrk")) file.tracks.push_back(detail::parse_track(body));
  }
  return file;
}

// ---------------------------------------------------------------------------
// Writing

namespace detail {

inline void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

inline void append(Bytes& out, const Bytes& more) { out.insert(out.end(), more.begin(), more.end()); }

inline void write_event(Bytes& out, const MidiEvent& e) {
  append(out, encode_vlq(e.delta_ticks));
  std::visit(
      [&out](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, NoteOn>) {
          out.insert(out.end(), {static_cast<std::uint8_t>(0x90u | k.channel), k.pitch, k.velocity});
        } else if constexpr (std::is_same_v<K, NoteOff>) {
          out.insert(out.end(), {static_cast<std::uint8_t>(0x80u | k.channel), k.pitch, k.velocity});
        } else if constexpr (std::is_same_v<K, TempoChange>) {
          const auto t = k.us_per_quarter;
          out.insert(out.end(), {std::uint8_t{0xFF}, kMetaTempo, std::uint8_t{3}, static_cast<std::uint8_t>(t >> 16),
                                 static_cast<std::uint8_t>(t >> 8), static_cast<std::uint8_t>(t)});
        } else if constexpr (std::is_same_v<K, OtherMeta>) {
          out.push_back(0xFF);
          out.push_back(k.type);
          append(out, encode_vlq(static_cast<std::uint32_t>(k.payload.size())));
          append(out, k.payload);
        } else {
          out.push_back(k.status);
          if (k.status == 0xF0 || k.status == 0xF7) append(out, encode_vlq(static_cast<std::uint32_t>(k.payload.size())));
          append(out, k.payload);
        }
      },
      e.kind);
}

}  // namespace detail

inline Bytes write_midi(const MidiFile& file) {
  validate(file);
  Bytes out;
  out.insert(out.end(), {'M', 'T', 'h', 'd'});
  detail::put_u32(out, 6);
  detail::put_u16(out, file.format);
  detail::put_u16(out, static_cast<std::uint16_t>(file.tracks.size()));
  detail::put_u16(out, file.division);
  for (const auto& track : file.tracks) {
    Bytes body;
    for (const auto& e : track) detail::write_event(body, e);
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    detail::put_u32(out, static_cast<std::uint32_t>(body.size()));
    detail::append(out, body);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Track merge

/// Flattens all tracks into note onsets sorted by (tick, pitch). The tempo is
/// the one in effect at the first onset, 500000 when none precedes it.
inline MergedNotes merge_tracks(const MidiFile& file) {
  struct Tempo {
    std::uint64_t tick;
    std::size_t order;
    std::uint32_t value;
  };
  MergedNotes merged;
  std::vector<Tempo> tempos;
  for (const auto& track : file.tracks) {
    std::uint64_t tick = 0;
    for (const auto& e : track) {
      tick += e.delta_ticks;
      if (const auto* on = std::get_if<NoteOn>(&e.kind); on != nullptr && on->velocity > 0) {
        merged.notes.push_back({tick, on->pitch, on->velocity});
      } else if (const auto* t = std::get_if<TempoChange>(&e.kind)) {
        tempos.push_back({tick, tempos.size(), t->us_per_quarter});
      }
    }
  }
  std::stable_sort(merged.notes.begin(), merged.notes.end(), [](const auto& a, const auto& b) {
    return a.tick != b.tick ? a.tick < b.tick : a.pitch < b.pitch;
  });
  if (!merged.notes.empty()) {
    const std::uint64_t first = merged.notes.front().tick;
    std::stable_sort(tempos.begin(), tempos.end(), [](const auto& a, const auto& b) { return a.tick < b.tick; });
    for (const auto& t : tempos) {
      if (t.tick > first) break;
      merged.initial_tempo = t.value;
    }
  }
  return merged;
}

}  // namespace notegen::midi
