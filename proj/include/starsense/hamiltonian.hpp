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

#include <string>
#include <vector>

#include "starsense/spin_system.hpp"
#include "starsense/state.hpp"

namespace starsense {

// Per-spin rotating-frame offsets, rad/s, subtracted from each spin's Larmor
// offset. Same length and order as the roster.
using FrameOffsets = std::vector<double>;

// Every spin on resonance in its own frame; only couplings remain.
FrameOffsets resonance_frame(const SpinSystem& system);

// One carrier per species. Spins sharing the `carrier_spin` species are
// referenced to that spin's Larmor offset minus `carrier_offset_rad_s`, so the
// carrier spin precesses at +carrier_offset_rad_s. Other species sit on
// resonance.
FrameOffsets carrier_frame(const SpinSystem& system, std::string_view carrier_spin,
                           double carrier_offset_rad_s = 0.0);

// Weak-coupling Hamiltonian
//   sum_j (w_j - f_j) sz_j / 2 + sum_{j<k} J_jk sz_j sz_k / 4,
// stored as its diagonal in the computational basis.
struct DiagonalHamiltonian {
  std::vector<double> energies;       // rad/s
  std::vector<double> frame_offsets;  // rad/s
  std::vector<std::string> diagnostics;

  std::size_t dim() const { return energies.size(); }
  Matrix to_matrix() const;
};

DiagonalHamiltonian build_hamiltonian(const SpinSystem& system, const FrameOffsets& frame);

// exp(-i H t) for t >= 0.
Operator free_propagator(const DiagonalHamiltonian& h, double t);

enum class CnotMode { ideal, quantized };

// Delay realising U_E = exp(-i pi (ZZI + ZIZ)/4) on CC-CS. Ideal: pi/J.
// Quantized: n / (Larmor difference in Hz) with the integer n closest to
// pi/J, which makes the CS chemical-shift precession a whole number of turns.
double entangling_delay(const SpinSystem& system, CnotMode mode);
int entangling_delay_turns(const SpinSystem& system);

}  // namespace starsense
