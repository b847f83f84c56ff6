/*
 * Copyright 2026 The riskctl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace riskctl {

enum class ErrorCode {
  DimensionMismatch,
  NonSymmetricPenalty,
  IndefinitePenalty,
  InfeasibleTarget,
  InvalidModel,
  UnsupportedSource,
  NonPsdWeight,
  InsufficientSamples,
  MomentMismatch,
  SingularInnerMatrix,
  NonFiniteRecursion,
  NotStabilizable,
  NotDetectable,
  NoConvergence,
  SingularInnovation,
  PlanExhausted,
  InvalidConfig,
  UsageError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. `field` names the offending input when known
/// (a config key, a matrix name) so callers can report it verbatim.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string &field() const noexcept { return field_; }

private:
  ErrorCode code_;
  std::string field_;
};

} // namespace riskctl
