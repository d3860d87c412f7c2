/*
 * Copyright 2026 The denitlab Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DENITLAB_ERROR_HPP_
#define DENITLAB_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace denitlab {

enum class ErrorCode {
  // dataset
  kMissingColumn,
  kUnparsableTimestamp,
  kNonMonotonicTime,
  kOffGridTimestamp,
  kFrameTooShort,
  kInvalidFractions,
  kZeroVarianceColumn,
  kEmptyRanges,
  // preprocess
  kBadParams,
  kMaskTouchesBoundary,
  kNoAdmissibleWindows,
  // models
  kDidNotConverge,
  kDimensionMismatch,
  kNonFiniteLoss,
  kEmptyWindows,
  kSpecMismatch,
  kWindowCrossesGap,
  kInvalidHyperparameter,
  kBadArtifact,
  // baselines / evaluation
  kEmptyTraining,
  kInsufficientHistory,
  kLengthMismatch,
  kNonFinite,
  kMixedGroups,
  kEmpty,
  // search / ablation
  kAllTrialsFailed,
  kGuardrailExceeded,
  kEmptyTable,
  // synthpilot
  kNonFiniteInput,
  kInvalidConfig,
  // io
  kIo,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kUnparsableTimestamp: return "UnparsableTimestamp";
    case ErrorCode::kNonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::kOffGridTimestamp: return "OffGridTimestamp";
    case ErrorCode::kFrameTooShort: return "FrameTooShort";
    case ErrorCode::kInvalidFractions: return "InvalidFractions";
    case ErrorCode::kZeroVarianceColumn: return "ZeroVarianceColumn";
    case ErrorCode::kEmptyRanges: return "EmptyRanges";
    case ErrorCode::kBadParams: return "BadParams";
    case ErrorCode::kMaskTouchesBoundary: return "MaskTouchesBoundary";
    case ErrorCode::kNoAdmissibleWindows: return "NoAdmissibleWindows";
    case ErrorCode::kDidNotConverge: return "DidNotConverge";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kEmptyWindows: return "EmptyWindows";
    case ErrorCode::kSpecMismatch: return "SpecMismatch";
    case ErrorCode::kWindowCrossesGap: return "WindowCrossesGap";
    case ErrorCode::kInvalidHyperparameter: return "InvalidHyperparameter";
    case ErrorCode::kBadArtifact: return "BadArtifact";
    case ErrorCode::kEmptyTraining: return "EmptyTraining";
    case ErrorCode::kInsufficientHistory: return "InsufficientHistory";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kMixedGroups: return "MixedGroups";
    case ErrorCode::kEmpty: return "Empty";
    case ErrorCode::kAllTrialsFailed: return "AllTrialsFailed";
    case ErrorCode::kGuardrailExceeded: return "GuardrailExceeded";
    case ErrorCode::kEmptyTable: return "EmptyTable";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace denitlab

#endif  // DENITLAB_ERROR_HPP_
