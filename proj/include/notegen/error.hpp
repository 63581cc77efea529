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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace notegen {

enum class Errc {
  // midi codec
  UnterminatedVlq,
  TruncatedInput,
  ValueTooLarge,
  BadHeader,
  UnsupportedFormat,
  SmpteDivisionUnsupported,
  TruncatedChunk,
  BadEventStatus,
  InvariantViolation,
  // numerics / model / optim
  ShapeMismatch,
  BadProbability,
  BadRate,
  CacheMismatch,
  NonFiniteGradient,
  // pipeline
  EmptyCorpus,
  NoSamples,
  NonFiniteLoss,
  VersionMismatch,
  CorruptCheckpoint,
  SeedTooShort,
  InvalidConfig,
  Io,
};

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::UnterminatedVlq: return "UnterminatedVlq";
    case Errc::TruncatedInput: return "TruncatedInput";
    case Errc::ValueTooLarge: return "ValueTooLarge";
    case Errc::BadHeader: return "BadHeader";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::SmpteDivisionUnsupported: return "SmpteDivisionUnsupported";
    case Errc::TruncatedChunk: return "TruncatedChunk";
    case Errc::BadEventStatus: return "BadEventStatus";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::BadProbability: return "BadProbability";
    case Errc::BadRate: return "BadRate";
    case Errc::CacheMismatch: return "CacheMismatch";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::NoSamples: return "NoSamples";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::CorruptCheckpoint: return "CorruptCheckpoint";
    case Errc::SeedTooShort: return "SeedTooShort";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
/// what() is "<CodeName>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& detail) { throw Error(code, detail); }

}  // namespace notegen
