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

#include "latentdecode/error.hpp"

namespace latentdecode {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::UpstreamMissing: return "UpstreamMissing";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::TooFewItems: return "TooFewItems";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::NonFiniteFitness: return "NonFiniteFitness";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::ZeroNormInstance: return "ZeroNormInstance";
    case ErrorCode::GradientUnavailable: return "GradientUnavailable";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

ErrorClass classify(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
      return ErrorClass::Config;
    case ErrorCode::SingularDesign:
    case ErrorCode::NonFinite:
    case ErrorCode::DegenerateCovariance:
    case ErrorCode::NonFiniteFitness:
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::ZeroVariance:
    case ErrorCode::ZeroNorm:
    case ErrorCode::ZeroNormInstance:
    case ErrorCode::GradientUnavailable:
    case ErrorCode::Unsupported:
      return ErrorClass::Numeric;
    default:
      return ErrorClass::Data;
  }
}

}  // namespace latentdecode
