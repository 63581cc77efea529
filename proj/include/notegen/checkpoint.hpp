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

// Binary checkpoint, little-endian throughout:
//
//   "NGCKPT01"            8-byte magic
//   u32 version           currently 1
//   u64 payload_length    bytes that follow, checksum included
//   payload:
//     u64 window, hidden, input_dim, output_dim; f64 dropout_rate
//     u64 dt_max_ticks; u32 division
//     f64 lr, rho, epsilon
//     u64 rng_state; u64 epochs_completed
//     u32 tensor_count, then per tensor:
//       u16 name_length, name bytes, u32 rank, u64 dims[rank], f64 data[...]
//       (five parameters, then the five RMSprop accumulators as "rms/<name>")
//   u64 FNV-1a hash of the payload bytes before it

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "notegen/error.hpp"
#include "notegen/model.hpp"
#include "notegen/note_matrix.hpp"
#include "notegen/optim.hpp"

namespace notegen {

inline constexpr char kCheckpointMagic[8] = {'N', 'G', 'C', 'K', 'P', 'T', '0', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  ScalingParams scaling;
  std::uint16_t division = 480;
  RmspropState optimizer;
  std::uint64_t rng_state = 0;
  std::uint64_t epochs_completed = 0;

  bool operator==(const Checkpoint& o) const {
    bool same_state = true;
    for_each_tensor_pair(optimizer.mean_square, o.optimizer.mean_square,
                         [&](std::string_view, const Tensor& a, const Tensor& b) { same_state = same_state && a == b; });
    return params == o.params && scaling == o.scaling && division == o.division &&
           optimizer.config == o.optimizer.config && same_state && rng_state == o.rng_state &&
           epochs_completed == o.epochs_completed;
  }
};

namespace detail {

inline std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001B3ull;
  }
  return h;
}

class ByteWriter {
 public:
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void tensor(std::string_view name, const Tensor& t) {
    uint(static_cast<std::uint16_t>(name.size()));
    bytes.insert(bytes.end(), name.begin(), name.end());
    uint(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) uint(static_cast<std::uint64_t>(d));
    for (double v : t.data()) f64(v);
  }

  std::vector<std::uint8_t> bytes;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v = static_cast<U>(v | (static_cast<U>(bytes_[pos_ + i]) << (8 * i)));
    pos_ += sizeof(U);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

  Tensor tensor(std::string_view expected_name, const Shape& expected_shape) {
    const auto len = uint<std::uint16_t>();
    need(len);
    const std::string name(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    if (name != expected_name) fail(Errc::CorruptCheckpoint, "expected tensor " + std::string(expected_name) + ", found " + name);
    const auto rank = uint<std::uint32_t>();
    if (rank != expected_shape.size()) fail(Errc::CorruptCheckpoint, "rank mismatch for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(uint<std::uint64_t>());
    if (shape != expected_shape) {
      fail(Errc::CorruptCheckpoint, name + " has shape " + shape_string(shape) + ", config implies " + shape_string(expected_shape));
    }
    std::vector<double> data(Tensor::count(shape));
    need(data.size() * 8);
    for (double& v : data) v = f64();
    return Tensor(std::move(shape), std::move(data));
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > bytes_.size() - pos_) fail(Errc::CorruptCheckpoint, "checkpoint is truncated");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  detail::ByteWriter payload;
  const ModelConfig& cfg = c.params.config;
  payload.uint<std::uint64_t>(cfg.window);
  payload.uint<std::uint64_t>(cfg.hidden);
  payload.uint<std::uint64_t>(cfg.input_dim);
  payload.uint<std::uint64_t>(cfg.output_dim);
  payload.f64(cfg.dropout_rate);
  payload.uint<std::uint64_t>(c.scaling.dt_max_ticks);
  payload.uint<std::uint32_t>(c.division);
  payload.f64(c.optimizer.config.lr);
  payload.f64(c.optimizer.config.rho);
  payload.f64(c.optimizer.config.epsilon);
  payload.uint<std::uint64_t>(c.rng_state);
  payload.uint<std::uint64_t>(c.epochs_completed);
  payload.uint<std::uint32_t>(10);
  for_each_tensor(c.params, [&](std::string_view name, const Tensor& t) { payload.tensor(name, t); });
  for_each_tensor(c.optimizer.mean_square,
                  [&](std::string_view name, const Tensor& t) { payload.tensor("rms/" + std::string(name), t); });
  payload.uint<std::uint64_t>(detail::fnv1a(payload.bytes));

  detail::ByteWriter out;
  out.bytes.assign(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  out.uint<std::uint32_t>(kCheckpointVersion);
  out.uint<std::uint64_t>(payload.bytes.size());
  out.bytes.insert(out.bytes.end(), payload.bytes.begin(), payload.bytes.end());
  return std::move(out.bytes);
}

inline Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    fail(Errc::CorruptCheckpoint, "missing NGCKPT01 magic");
  }
  detail::ByteReader header(bytes.subspan(8));
  const auto version = header.uint<std::uint32_t>();
  if (version != kCheckpointVersion) {
    fail(Errc::VersionMismatch, "checkpoint version " + std::to_string(version) + ", expected " +
                                    std::to_string(kCheckpointVersion));
  }
  const auto length = header.uint<std::uint64_t>();
  if (length != bytes.size() - 20 || length < 8) fail(Errc::CorruptCheckpoint, "payload length does not match file size");
  const auto payload = bytes.subspan(20, length - 8);
  detail::ByteReader tail(bytes.subspan(20 + payload.size()));
  if (tail.uint<std::uint64_t>() != detail::fnv1a(payload)) fail(Errc::CorruptCheckpoint, "checksum mismatch");

  detail::ByteReader in(payload);
  Checkpoint c;
  ModelConfig& cfg = c.params.config;
  cfg.window = in.uint<std::uint64_t>();
  cfg.hidden = in.uint<std::uint64_t>();
  cfg.input_dim = in.uint<std::uint64_t>();
  cfg.output_dim = in.uint<std::uint64_t>();
  cfg.dropout_rate = in.f64();
  c.scaling.dt_max_ticks = in.uint<std::uint64_t>();
  const auto division = in.uint<std::uint32_t>();
  c.optimizer.config.lr = in.f64();
  c.optimizer.config.rho = in.f64();
  c.optimizer.config.epsilon = in.f64();
  c.rng_state = in.uint<std::uint64_t>();
  c.epochs_completed = in.uint<std::uint64_t>();
  if (cfg.window == 0 || cfg.hidden == 0 || cfg.input_dim == 0 || cfg.output_dim == 0 || cfg.hidden > (1u << 20) ||
      cfg.input_dim > (1u << 20) || cfg.output_dim > (1u << 20) || !(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0) ||
      c.scaling.dt_max_ticks == 0 || division == 0 || division > 0x7FFF) {
    fail(Errc::CorruptCheckpoint, "configuration snapshot out of range");
  }
  c.division = static_cast<std::uint16_t>(division);
  if (in.uint<std::uint32_t>() != 10) fail(Errc::CorruptCheckpoint, "unexpected tensor count");

  const ModelParams shapes = ModelParams::zeros(cfg);
  c.params.lstm = shapes.lstm;
  c.params.dense = shapes.dense;
  for_each_tensor_pair(c.params, shapes,
                       [&](std::string_view name, Tensor& t, const Tensor& s) { t = in.tensor(name, s.shape()); });
  c.optimizer.mean_square = ParamGrads::zeros_like(c.params);
  for_each_tensor(c.optimizer.mean_square, [&](std::string_view name, Tensor& t) {
    const Shape shape = t.shape();
    t = in.tensor("rms/" + std::string(name), shape);
  });
  if (in.remaining() != 0) fail(Errc::CorruptCheckpoint, "trailing bytes after tensors");
  return c;
}

/// Writes to a sibling temporary file and renames it over `path`, so a
/// crash mid-write leaves the previous checkpoint intact.
inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const auto bytes = encode_checkpoint(c);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::Io, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(Errc::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(Errc::Io, "cannot move checkpoint into place: " + ec.message());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace notegen
