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

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "starsense/hamiltonian.hpp"
#include "starsense/spin_system.hpp"
#include "starsense/state.hpp"

namespace starsense {

// Relaxation constants of one Fe(III)-doped sample.
struct SampleSpec {
  std::string name;
  double impurity_concentration_mM = 0.0;
  double t1_cc_s = 0.0;
  double t2_full_s = 0.0;
  double t2_selective_s = 0.0;
  double t1_hss_s = 0.0;

  void validate() const;  // throws std::invalid_argument unless all positive
  // Same sample at another impurity concentration; relaxation rates scale
  // linearly with C_m, so every time constant scales inversely.
  SampleSpec scaled_to(double concentration_mM) const;
};

// The four measured samples (12, 26, 47, 94 mM). `index` is 1-based.
SampleSpec preset_sample(int index);
std::vector<SampleSpec> preset_samples();

SampleSpec parse_sample(std::string_view text, const std::string& source = "<string>");
SampleSpec load_sample(const std::filesystem::path& path);
std::string format_sample(const SampleSpec& sample);

enum class DecouplingMode { none, selective, full };

std::string to_string(DecouplingMode mode);
DecouplingMode parse_decoupling_mode(std::string_view text);  // throws std::invalid_argument

// Labels that a decoupling mode nullifies: full -> HC and all HS,
// selective -> HC, none -> nothing.
std::vector<std::string> decoupled_spins(const SpinSystem& system, DecouplingMode mode);

// Register with the decoupled spins removed.
SpinSystem apply_decoupling(const SpinSystem& system, DecouplingMode mode);

// Per-spin infinite-temperature flip rates (1/s), aligned with a roster.
struct NoiseSpec {
  std::vector<double> rates;
  DecouplingMode decoupling = DecouplingMode::none;

  double max_rate() const;
  static NoiseSpec noiseless(std::size_t n_spins) { return {std::vector<double>(n_spins, 0.0)}; }
};

// Rates for every spin of `system`: HS and HC at 1/T1(HSs), carbons at
// 1/T1(CC).
NoiseSpec calibrate_rates(const SampleSpec& sample, const SpinSystem& system,
                          DecouplingMode mode = DecouplingMode::none);

// Rate per unit impurity concentration, 1/(s mM).
struct Relaxivity {
  double carbon = 0.0;
  double proton = 0.0;
};

Relaxivity relaxivity_from(const SampleSpec& reference);
NoiseSpec rates_from_relaxivity(const Relaxivity& relaxivity, double concentration_mM,
                                const SpinSystem& system, DecouplingMode mode = DecouplingMode::none);

// Jump operators sigma_+ and sigma_- on one spin, each at rate/2.
struct LindbladChannel {
  std::size_t spin = 0;
  double rate = 0.0;

  // Kraus operators of the exact channel over dt.
  std::array<Matrix2, 4> kraus(double dt) const;
  // Jump operators sqrt(rate/2) sigma_+, sqrt(rate/2) sigma_-.
  std::array<Matrix2, 2> jump_operators() const;
};

// Exact single-spin flip-flop map over dt applied to factor `spin`:
// populations relax toward equal, coherences shrink by exp(-rate dt / 2).
void apply_flip_channel(Matrix& rho, std::size_t n_spins, std::size_t spin, double rate, double dt);

// Largest dt * max(rate) accepted by the integrator.
inline constexpr double kMaxRateStep = 0.05;

using StepObserver = std::function<void(const Matrix& rho, std::size_t step)>;

// Fixed-step symmetric splitting: half-step diagonal phase, exact flip-flop
// maps on every spin over dt, half-step phase.
class Evolver {
 public:
  Evolver(const DiagonalHamiltonian& h, const NoiseSpec& noise, double dt);

  double dt() const { return dt_; }
  std::size_t dim() const { return half_phase_.size(); }
  void step(Matrix& rho) const;

 private:
  double dt_;
  std::size_t n_spins_;
  std::vector<Complex> half_phase_;
  std::vector<double> rates_;
};

// Trajectory of `steps` steps (steps + 1 states, the first being rho).
std::vector<DensityMatrix> evolve(const DensityMatrix& rho, const DiagonalHamiltonian& h,
                                  const NoiseSpec& noise, double dt, std::size_t steps);

// Evolves for `duration` in ceil(duration / max_dt) equal steps (further
// refined to honour the rate guard). The observer sees each step's state.
void propagate(Matrix& rho, const DiagonalHamiltonian& h, const NoiseSpec& noise,
               double duration, double max_dt, const StepObserver& observer = {});

}  // namespace starsense
