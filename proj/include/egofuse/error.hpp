// Copyright 2026 The egofuse Authors
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

namespace egofuse {

enum class Errc {
  invalid_argument,
  invalid_rotation,
  invalid_skeleton,
  dimension_mismatch,
  empty_input,
  parse_malformed_header,
  parse_short_element,
  parse_non_finite,
  parse_schema,
  io_unreadable,
  degenerate_configuration,
  insufficient_correspondences,
  unrecoverable_trajectory,
  isolated_frame,
  ambiguous_correction,
  non_finite_energy,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::invalid_rotation: return "invalid rotation";
    case Errc::invalid_skeleton: return "invalid skeleton";
    case Errc::dimension_mismatch: return "dimension mismatch";
    case Errc::empty_input: return "empty input";
    case Errc::parse_malformed_header: return "malformed header";
    case Errc::parse_short_element: return "short element count";
    case Errc::parse_non_finite: return "non-finite value";
    case Errc::parse_schema: return "schema mismatch";
    case Errc::io_unreadable: return "unreadable file";
    case Errc::degenerate_configuration: return "degenerate configuration";
    case Errc::insufficient_correspondences: return "insufficient correspondences";
    case Errc::unrecoverable_trajectory: return "unrecoverable trajectory";
    case Errc::isolated_frame: return "isolated frame";
    case Errc::ambiguous_correction: return "ambiguous correction";
    case Errc::non_finite_energy: return "non-finite energy";
  }
  return "unknown error";
}

// Every failure in the library is reported through this exception; code()
// lets callers branch on the failure kind without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace egofuse
