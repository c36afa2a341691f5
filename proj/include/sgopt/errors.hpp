/*
 Copyright 2026 The SGOPT Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sgopt {

enum class ErrorKind {
  InfeasibleConstraint,
  RankDeficient,
  SingularDiagonal,
  UnknownVariable,
  DimensionMismatch,
  UnconstrainedUnboundedVariable,
  SingularInnovation,
  SingularKKT,
  NoProgress,
  InvalidConfig,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InfeasibleConstraint: return "InfeasibleConstraint";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::SingularDiagonal: return "SingularDiagonal";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnconstrainedUnboundedVariable: return "UnconstrainedUnboundedVariable";
    case ErrorKind::SingularInnovation: return "SingularInnovation";
    case ErrorKind::SingularKKT: return "SingularKKT";
    case ErrorKind::NoProgress: return "NoProgress";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above.
class SolverError : public std::runtime_error {
 public:
  SolverError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sgopt
