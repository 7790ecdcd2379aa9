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

#include "starsense/spin_system.hpp"
#include "starsense/types.hpp"

namespace starsense {

enum class Axis { x, y, z, identity };

Matrix2 pauli(Axis axis);

// Places `local` on the listed tensor factors (in the given order) of an
// n-spin register, identity elsewhere.
Matrix embed(std::size_t n_spins, std::span<const std::size_t> factors, const Matrix& local);

// A 2^n operator. When constructed as unitary, U U^dagger = I is verified.
class Operator {
 public:
  static constexpr double kUnitaryTolerance = 1e-12;

  explicit Operator(Matrix m, bool unitary = false);

  const Matrix& matrix() const { return m_; }
  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  bool is_unitary() const { return unitary_; }

  Operator adjoint() const;
  Operator operator*(const Operator& rhs) const;

 private:
  Matrix m_;
  bool unitary_ = false;
};

// sigma_axis on the named spin, identity on every other factor.
Operator embed_pauli(const SpinSystem& system, std::string_view spin, Axis axis);

struct StateCheck {
  double hermiticity_error = 0.0;  // max |rho - rho^dagger|
  double trace_error = 0.0;        // |tr rho - 1|
  bool eigenvalue_floor_ok = true; // smallest eigenvalue >= floor
  bool ok(double tol) const {
    return hermiticity_error <= tol && trace_error <= tol && eigenvalue_floor_ok;
  }
};

// Positivity is tested through a Cholesky factorisation of rho - floor*I.
StateCheck check_state(const Matrix& rho, double eigenvalue_floor = -1e-9,
                       bool check_positivity = true);

// Hermitian, unit-trace state over the register's product basis.
class DensityMatrix {
 public:
  static constexpr double kTolerance = 1e-10;

  explicit DensityMatrix(Matrix m);
  static DensityMatrix maximally_mixed(std::size_t n_spins);

  const Matrix& matrix() const { return m_; }
  Matrix release() && { return std::move(m_); }
  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  std::size_t n_spins() const;

  double purity() const;
  Complex expectation(const Matrix& op) const { return (op * m_).trace(); }

 private:
  Matrix m_;
};

// Reduced state on the kept labels, ordered as in the roster.
DensityMatrix partial_trace(const DensityMatrix& rho, const SpinSystem& system,
                            const std::vector<std::string>& keep);

// Thermal state of the carbon chain at polarisation epsilon (other spins
// fully mixed).
struct ThermalState {
  Matrix raw;                           // unnormalised sum, trace = m(1 + eps/2)
  DensityMatrix state;                  // raw / tr(raw)
  DensityMatrix observable_equivalent;  // |0><0| on CC, rest fully mixed
};

inline constexpr double kDefaultPolarization = 1e-5;

ThermalState thermal_state(const SpinSystem& system, double epsilon = kDefaultPolarization);

// |+><+| on CC times (|01><01| + |10><10|)/2 on CS1,CS2, other spins mixed.
DensityMatrix prepare_rho_i(const SpinSystem& system);

}  // namespace starsense
