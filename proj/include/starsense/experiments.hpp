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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "starsense/acquisition.hpp"
#include "starsense/gates.hpp"
#include "starsense/hamiltonian.hpp"
#include "starsense/noise.hpp"
#include "starsense/pulseprog.hpp"
#include "starsense/spin_system.hpp"
#include "starsense/state.hpp"

namespace starsense {

// ---------------------------------------------------------------------------
// Interpreter

enum class InitialState {
  observable_equivalent,  // |0><0| on CC, everything else fully mixed
  thermal,                // carbon-chain thermal state at the default polarisation
  rho_i,                  // |+> on CC, CS pair in (|01><01| + |10><10|)/2
};

std::string to_string(InitialState s);
InitialState parse_initial_state(std::string_view text);
Matrix initial_state(InitialState kind, const SpinSystem& system);

struct InterpreterOptions {
  // Ideal: every spin on resonance. Quantized: carbons in the CC carrier
  // frame, so chemical-shift precession is simulated.
  CnotMode frame = CnotMode::ideal;
  double max_step_s = 1e-4;
  // CC line position in the acquired spectrum.
  double display_offset_rad_s = kTwoPi * 100.0;
  // Environment before the first decouple statement.
  DecouplingMode initial_mode = DecouplingMode::none;
  // State spot checks every this many integrator steps (0 disables).
  std::size_t check_every = 10;
  double eigenvalue_floor = -1e-9;
  double validity_tolerance = 1e-10;
};

struct ValidityReport {
  std::size_t full_checks = 0;   // dense-state checks (Hermiticity, trace, eigenvalue floor)
  std::size_t block_checks = 0;  // acquisition block checks
  std::size_t violations = 0;
  double worst_hermiticity = 0.0;
  double worst_trace = 0.0;
  std::string first_violation;

  bool ok() const { return violations == 0; }
  void merge(const ValidityReport& other);
};

struct ProgramRun {
  SpinSystem register_system;
  Matrix state_before_acquire;
  Fid fid;
  ValidityReport validity;
  double duration_s = 0.0;
  std::size_t steps = 0;
};

// The least-decoupled environment the program visits fixes which spins are
// simulated; more strongly decoupled intervals zero the extra couplings.
SpinSystem program_register(const SpinSystem& molecule, const PulseProgram& program,
                            DecouplingMode initial_mode = DecouplingMode::none);

// Runs `program` from `rho0` on `system` with per-spin `noise` (aligned with
// `system`). Pulses and zrot act as ideal instantaneous rotations.
ProgramRun execute(const PulseProgram& program, const SpinSystem& system, const NoiseSpec& noise,
                   Matrix rho0, const InterpreterOptions& options = {});

// Convenience: register from the program, rates from the sample.
ProgramRun run_program(const PulseProgram& program, const SpinSystem& molecule, const SampleSpec& sample,
                       InitialState init, const InterpreterOptions& options = {});

// Peak centers (rad/s, descending: high-ppm line first) of the CC triplet at
// the display offset.
std::vector<double> triplet_centers(const SpinSystem& system, double display_offset_rad_s);
PpmAxis cc_ppm_axis(const SpinSystem& system, double display_offset_rad_s);

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentConfig {
  std::optional<std::filesystem::path> molecule_path;  // default: built-in 2-propanol
  std::string sample = "sample1";                      // preset name or file path
  std::string sequence = "field_on_cs";                // builtin name or DSL path
  std::vector<double> thetas_deg = {0.0, 30.0, 50.0, 90.0};
  double tau_ms = 3.4;
  double tau_unit_ms = 3.44;
  std::vector<int> cycles = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  DecouplingMode decoupling = DecouplingMode::full;
  CnotMode cnot = CnotMode::ideal;
  InitialState initial = InitialState::observable_equivalent;
  int acquire_points = 4096;
  double dwell_ms = 1.0;
  int zero_fill = 2;
  double jt2 = 22.0;
  double max_step_s = 1e-4;
  std::size_t check_every = 10;
  int jobs = 1;
  std::filesystem::path output_dir = "out";

  void validate() const;  // throws ConfigError
  SpinSystem molecule() const;
  SampleSpec sample_spec() const;
  InterpreterOptions interpreter_options() const;
};

// Key/value config file; every field above is a key (lists comma separated).
ExperimentConfig parse_experiment_config(std::string_view text, const std::string& source = "<string>");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct PeakRecord {
  std::string sequence;  // builtin name or field site
  double theta_deg = 0.0;
  int line = 0;          // 0 = high-ppm line, 1 = center, 2 = low-ppm line
  double center_ppm = 0.0;
  double phase_deg = 0.0;
  double expected_deg = 0.0;
  double amplitude = 0.0;
};

struct SpectrumTheoryResult {
  std::vector<PeakRecord> peaks;
};

struct PhaseSweepResult {
  std::vector<PeakRecord> peaks;
  ValidityReport validity;
};

struct DecayCurve {
  std::string label;  // "full", "selective", "selective_xy8"
  std::vector<double> tau_s;
  std::vector<double> amplitude;
  DecayFit fit;
};

struct NoiseDecayResult {
  std::vector<DecayCurve> curves;  // full, selective, selective_xy8
  ValidityReport validity;
  const DecayCurve& curve(std::string_view label) const;
};

struct FidTrace {
  std::string sample;
  DecouplingMode mode = DecouplingMode::full;
  Fid fid;
  DecayFit fit;  // of |S(t)|
};

struct FidAppendixResult {
  std::vector<FidTrace> traces;
  ValidityReport validity;
};

// Expected phase of each triplet line (high ppm first), degrees.
std::vector<double> expected_phases_deg(FieldSite site, double theta_deg);

SpectrumTheoryResult run_spectrum_theory(const ExperimentConfig& config);
PhaseSweepResult run_phase_sweep(const ExperimentConfig& config);
NoiseDecayResult run_noise_decay(const ExperimentConfig& config);
FidAppendixResult run_fid_appendix(const ExperimentConfig& config);

// Signal amplitude read from the three triplet lines.
double triplet_amplitude(const Fid& fid, const SpinSystem& system, const ExperimentConfig& config,
                         double calibration_decay_rate);

// ---------------------------------------------------------------------------
// Plots: self-contained SVG line charts; each is written next to a CSV of the
// plotted numbers.

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool reverse_x = false;  // NMR convention for ppm axes
};

std::string render_svg(const Plot& plot);
// Writes <stem>.svg and <stem>.csv (columns: series, x, y).
void write_plot(const Plot& plot, const std::filesystem::path& stem);

}  // namespace starsense
