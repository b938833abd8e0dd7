// Copyright 2026 The LatentDecode Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LATENTDECODE_ERROR_HPP
#define LATENTDECODE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace latentdecode {

enum class ErrorCode {
  // data
  MissingFile,
  BadMagic,
  ShapeMismatch,
  NonFiniteValue,
  IndexOutOfRange,
  UnknownFormat,
  EmptyInput,
  EmptyMask,
  IoFailure,
  UpstreamMissing,
  TooFewSamples,
  TooFewItems,
  LengthMismatch,
  ImageTooSmall,
  // numeric
  SingularDesign,
  NonFinite,
  DegenerateCovariance,
  NonFiniteFitness,
  NonFiniteGradient,
  ZeroVariance,
  ZeroNorm,
  ZeroNormInstance,
  GradientUnavailable,
  Unsupported,
  // configuration
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Exit-code class used by the command-line front end.
enum class ErrorClass { Config = 2, Data = 3, Numeric = 4 };

ErrorClass classify(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace latentdecode

#endif  // LATENTDECODE_ERROR_HPP
