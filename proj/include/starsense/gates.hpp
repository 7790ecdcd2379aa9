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

#include <span>
#include <string>
#include <vector>

#include "starsense/hamiltonian.hpp"
#include "starsense/spin_system.hpp"
#include "starsense/state.hpp"

namespace starsense {

// R(phi, theta) = exp(-i theta (sx cos phi + sy sin phi) / 2)
Matrix2 rotation_matrix(double phi, double theta);
// Z(theta) = exp(-i theta sz / 2)
Matrix2 z_rotation_matrix(double theta);

// Identical rotation R(phi, theta) on every named spin.
struct Rotation {
  std::vector<std::string> targets;
  double phi = 0.0;    // rad, axis angle from x in the xy-plane
  double theta = 0.0;  // rad, rotation angle
};

Operator rotation_unitary(const Rotation& r, const SpinSystem& system);
Operator z_unitary(const std::vector<std::string>& targets, double theta, const SpinSystem& system);

// Accumulated virtual-Z angle per spin. A pulse R(phi, theta) issued after
// virtual Z(a) is played as R(phi - a, theta); the pending Z(a) is carried to
// the end of the sequence.
class PhaseFrame {
 public:
  explicit PhaseFrame(std::size_t n_spins) : angles_(n_spins, 0.0) {}

  std::size_t size() const { return angles_.size(); }
  double angle(std::size_t spin) const { return angles_.at(spin); }
  void advance(std::size_t spin, double theta);
  PhaseFrame inverse() const;
  bool is_identity(double tol = 1e-15) const;

  // Physical phase of a pulse requested at `phi` on `spin`.
  double effective_phase(std::size_t spin, double phi) const { return phi - angle(spin); }

 private:
  std::vector<double> angles_;  // wrapped to (-pi, pi]
};

PhaseFrame virtual_z(PhaseFrame frame, std::span<const std::size_t> targets, double theta);

// Rotation as played through `frame`: each target gets its own shifted phase.
Operator rotation_unitary(const Rotation& r, const SpinSystem& system, const PhaseFrame& frame);

// The frame's pending Z rotations as a physical operator.
Operator frame_unitary(const PhaseFrame& frame);

// e^{-i pi/4} Z_C(-pi/2) Z_S(-pi/2) R_S(0, pi/2) U_E R_S(pi/2, pi/2).
// Ideal mode uses the exact ZZ propagator for U_E; quantized mode uses free
// evolution in the CC carrier frame for the quantized entangling delay.
Operator pseudo_cnot(const SpinSystem& system, CnotMode mode = CnotMode::ideal);

DensityMatrix apply_unitary(const DensityMatrix& rho, const Operator& u);

// rho <- u_k rho u_k^dagger for a single-spin u on factor `spin`; O(4^n).
void apply_local_unitary(Matrix& rho, std::size_t n_spins, std::size_t spin, const Matrix2& u);

// rho_rc <- d_r rho_rc conj(d_c).
void apply_diagonal_unitary(Matrix& rho, std::span<const Complex> diagonal);

// Multiplies by the conjugate phase of the first (row-major) element with
// modulus above 1e-12, so operators differing by a global phase compare equal.
Matrix normalize_global_phase(const Matrix& m);
double distance_up_to_global_phase(const Matrix& a, const Matrix& b);

}  // namespace starsense
