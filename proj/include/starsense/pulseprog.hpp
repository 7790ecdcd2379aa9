// Copyright 2026 The starsense Authors
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

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "starsense/hamiltonian.hpp"
#include "starsense/noise.hpp"

namespace starsense {

// Pulse-program DSL, one statement per line:
//
//   pulse <CC|CS|ALL> <phi_deg> <theta_deg>
//   zrot <CC|CS|ALL> <theta_deg>
//   delay <ms>
//   decouple <none|selective|full>
//   repeat <n> { ... }
//   acquire <points> <dwell_ms>
//
// `#` starts a comment. Braces also terminate statements, so short repeat
// blocks may be written on one line. Exactly one acquire, as the last
// top-level statement.

enum class PulseTarget { cc, cs, all };

std::string_view to_string(PulseTarget target);

struct SourceSpan {
  int line = 1;            // 1-based
  int column = 1;          // 1-based
  std::size_t offset = 0;  // byte offset into the source
  std::size_t length = 0;
};

// Payloads keep the DSL units (degrees, milliseconds) so printing and
// re-parsing is exact; the accessors give SI values.
struct PulseEvent {
  PulseTarget target = PulseTarget::cc;
  double phi_deg = 0.0;
  double theta_deg = 0.0;
  double phi() const { return deg_to_rad(phi_deg); }
  double theta() const { return deg_to_rad(theta_deg); }
  bool operator==(const PulseEvent&) const = default;
};

struct VirtualZEvent {
  PulseTarget target = PulseTarget::cc;
  double theta_deg = 0.0;
  double theta() const { return deg_to_rad(theta_deg); }
  bool operator==(const VirtualZEvent&) const = default;
};

struct DelayEvent {
  double ms = 0.0;
  double seconds() const { return ms * 1e-3; }
  bool operator==(const DelayEvent&) const = default;
};

struct DecoupleEvent {
  DecouplingMode mode = DecouplingMode::full;
  bool operator==(const DecoupleEvent&) const = default;
};

struct AcquireEvent {
  int points = 0;
  double dwell_ms = 0.0;
  double dwell_s() const { return dwell_ms * 1e-3; }
  bool operator==(const AcquireEvent&) const = default;
};

struct Event;

struct RepeatEvent {
  int count = 1;
  std::vector<Event> body;
};

struct Event {
  std::variant<PulseEvent, VirtualZEvent, DelayEvent, DecoupleEvent, RepeatEvent, AcquireEvent> kind;
  SourceSpan span;
};

// Structural equality; spans are ignored.
bool operator==(const RepeatEvent& a, const RepeatEvent& b);
bool operator==(const Event& a, const Event& b);

struct PulseProgram {
  std::vector<Event> events;

  const AcquireEvent& acquire() const;  // throws std::logic_error if absent
  double duration_s() const;            // delays only; pulses are instantaneous
  std::size_t pulse_count(PulseTarget target) const;  // ALL pulses count for every target
  bool operator==(const PulseProgram&) const = default;
};

enum class Severity { error, warning };

struct ParseDiagnostic {
  Severity severity = Severity::error;
  std::string message;
  SourceSpan span;

  std::string format(std::string_view source_name) const;
};

struct ParseResult {
  std::optional<PulseProgram> program;
  std::vector<ParseDiagnostic> diagnostics;
  bool ok() const { return program.has_value(); }
};

inline constexpr int kMaxRepeatDepth = 8;

ParseResult parse_pulse_program(std::string_view text);
std::string print_pulse_program(const PulseProgram& program);

// Repeats unrolled and virtual Z folded into pulse phases; the frame still
// pending at the end is emitted as zrot statements just before acquire.
struct ExpandedProgram {
  PulseProgram program;
  double duration_s = 0.0;
};

ExpandedProgram expand(const PulseProgram& program);

enum class BuiltinSequence { field_on_cc, field_on_cs, xy8_sense };

std::string_view to_string(BuiltinSequence sequence);
BuiltinSequence parse_builtin_sequence(std::string_view name);  // throws std::invalid_argument

struct SequenceParams {
  double theta_deg = 0.0;
  // field_on_cc / field_on_cs: total sensing time. xy8_sense: pulse spacing,
  // so one XY-8 cycle lasts 8 * tau_ms.
  double tau_ms = 3.4;
  int n_cycles = 1;
  // Environment during the sensing window; everything else runs with all H
  // decoupled.
  DecouplingMode sensing_mode = DecouplingMode::full;
  double entangling_delay_ms = 1e3 / (2.0 * 38.4);
  PulseTarget xy8_target = PulseTarget::all;
  int acquire_points = 4096;
  double dwell_ms = 1.0;

  static SequenceParams for_system(const SpinSystem& system, CnotMode mode);
};

PulseProgram builtin_sequence(BuiltinSequence sequence, const SequenceParams& params);

}  // namespace starsense
