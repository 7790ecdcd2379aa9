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

#include "starsense/gates.hpp"

#include <cmath>

namespace starsense {

Matrix2 rotation_matrix(double phi, double theta) {
  if (!std::isfinite(phi) || !std::isfinite(theta)) {
    throw std::invalid_argument("rotation angles must be finite");
  }
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  Matrix2 m;
  m << c, -kI * s * std::exp(-kI * phi),
       -kI * s * std::exp(kI * phi), c;
  return m;
}

Matrix2 z_rotation_matrix(double theta) {
  Matrix2 m;
  m << std::exp(-kI * (theta / 2.0)), 0, 0, std::exp(kI * (theta / 2.0));
  return m;
}

namespace {

Operator local_product(const SpinSystem& system, const std::vector<std::size_t>& spins,
                       const std::vector<Matrix2>& factors) {
  const auto dim = static_cast<Eigen::Index>(system.dim());
  Matrix u = Matrix::Identity(dim, dim);
  for (std::size_t q = 0; q < spins.size(); ++q) {
    const std::size_t f[] = {spins[q]};
    u = embed(system.size(), f, factors[q]) * u;
  }
  return Operator(std::move(u), true);
}

std::vector<std::size_t> resolve(const std::vector<std::string>& targets, const SpinSystem& system) {
  if (targets.empty()) throw std::invalid_argument("rotation: empty target set");
  std::vector<std::size_t> out;
  for (const auto& t : targets) out.push_back(system.index_of(t));
  return out;
}

}  // namespace

Operator rotation_unitary(const Rotation& r, const SpinSystem& system) {
  return rotation_unitary(r, system, PhaseFrame(system.size()));
}

Operator rotation_unitary(const Rotation& r, const SpinSystem& system, const PhaseFrame& frame) {
  const auto spins = resolve(r.targets, system);
  std::vector<Matrix2> factors;
  for (auto s : spins) factors.push_back(rotation_matrix(frame.effective_phase(s, r.phi), r.theta));
  return local_product(system, spins, factors);
}

Operator z_unitary(const std::vector<std::string>& targets, double theta, const SpinSystem& system) {
  const auto spins = resolve(targets, system);
  return local_product(system, spins, std::vector<Matrix2>(spins.size(), z_rotation_matrix(theta)));
}

void PhaseFrame::advance(std::size_t spin, double theta) {
  angles_.at(spin) = wrap_phase(angles_.at(spin) + theta);
}

PhaseFrame PhaseFrame::inverse() const {
  PhaseFrame out(size());
  for (std::size_t i = 0; i < size(); ++i) out.angles_[i] = wrap_phase(-angles_[i]);
  return out;
}

bool PhaseFrame::is_identity(double tol) const {
  for (double a : angles_) {
    if (std::abs(a) > tol) return false;
  }
  return true;
}

PhaseFrame virtual_z(PhaseFrame frame, std::span<const std::size_t> targets, double theta) {
  for (auto t : targets) frame.advance(t, theta);
  return frame;
}

Operator frame_unitary(const PhaseFrame& frame) {
  const std::size_t n = frame.size();
  const std::size_t dim = std::size_t{1} << n;
  Matrix u = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t a = 0; a < dim; ++a) {
    double phase = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      phase += (a & spin_mask(n, s)) ? frame.angle(s) / 2.0 : -frame.angle(s) / 2.0;
    }
    u(a, a) = std::exp(kI * phase);
  }
  return Operator(std::move(u), true);
}

Operator pseudo_cnot(const SpinSystem& system, CnotMode mode) {
  const auto cc = system.index_of("CC");
  const auto cs1 = system.index_of("CS1");
  const auto cs2 = system.index_of("CS2");
  const std::vector<std::string> sides = {"CS1", "CS2"};
  const std::size_t n = system.size();

  Operator entangle = [&] {
    if (mode == CnotMode::ideal) {
      Matrix u = Matrix::Zero(static_cast<Eigen::Index>(system.dim()),
                              static_cast<Eigen::Index>(system.dim()));
      for (std::size_t a = 0; a < system.dim(); ++a) {
        const double zc = (a & spin_mask(n, cc)) ? -1.0 : 1.0;
        const double z1 = (a & spin_mask(n, cs1)) ? -1.0 : 1.0;
        const double z2 = (a & spin_mask(n, cs2)) ? -1.0 : 1.0;
        u(a, a) = std::exp(-kI * (kPi / 4.0) * (zc * z1 + zc * z2));
      }
      return Operator(std::move(u), true);
    }
    const auto h = build_hamiltonian(system, carrier_frame(system, "CC"));
    return free_propagator(h, entangling_delay(system, CnotMode::quantized));
  }();

  const Operator first = rotation_unitary({sides, kPi / 2.0, kPi / 2.0}, system);
  const Operator second = rotation_unitary({sides, 0.0, kPi / 2.0}, system);
  const Operator zc = z_unitary({"CC"}, -kPi / 2.0, system);
  const Operator zs = z_unitary(sides, -kPi / 2.0, system);
  Operator product = zc * zs * second * entangle * first;
  return Operator(std::exp(-kI * (kPi / 4.0)) * product.matrix(), true);
}

DensityMatrix apply_unitary(const DensityMatrix& rho, const Operator& u) {
  if (rho.dim() != u.dim()) throw std::invalid_argument("apply_unitary: dimension mismatch");
  return DensityMatrix(u.matrix() * rho.matrix() * u.matrix().adjoint());
}

void apply_local_unitary(Matrix& rho, std::size_t n_spins, std::size_t spin, const Matrix2& u) {
  const auto dim = static_cast<std::size_t>(rho.rows());
  const std::size_t m = spin_mask(n_spins, spin);
  const Complex u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
  // Left multiply: mix row pairs (r, r|m).
  for (std::size_t c = 0; c < dim; ++c) {
    Complex* col = rho.data() + c * dim;
    for (std::size_t r = 0; r < dim; ++r) {
      if (r & m) continue;
      const Complex a = col[r];
      const Complex b = col[r | m];
      col[r] = u00 * a + u01 * b;
      col[r | m] = u10 * a + u11 * b;
    }
  }
  // Right multiply by u^dagger: mix column pairs (c, c|m).
  const Complex v00 = std::conj(u00), v01 = std::conj(u10), v10 = std::conj(u01), v11 = std::conj(u11);
  for (std::size_t c = 0; c < dim; ++c) {
    if (c & m) continue;
    Complex* ca = rho.data() + c * dim;
    Complex* cb = rho.data() + (c | m) * dim;
    for (std::size_t r = 0; r < dim; ++r) {
      const Complex a = ca[r];
      const Complex b = cb[r];
      ca[r] = a * v00 + b * v10;
      cb[r] = a * v01 + b * v11;
    }
  }
}

void apply_diagonal_unitary(Matrix& rho, std::span<const Complex> diagonal) {
  const auto dim = static_cast<std::size_t>(rho.rows());
  if (diagonal.size() != dim) throw std::invalid_argument("diagonal unitary: dimension mismatch");
  for (std::size_t c = 0; c < dim; ++c) {
    const Complex dc = std::conj(diagonal[c]);
    Complex* col = rho.data() + c * dim;
    for (std::size_t r = 0; r < dim; ++r) col[r] *= diagonal[r] * dc;
  }
}

Matrix normalize_global_phase(const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const Complex x = m(r, c);
      if (std::abs(x) > 1e-12) return m * (std::conj(x) / std::abs(x));
    }
  }
  return m;
}

double distance_up_to_global_phase(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("global-phase distance: shape mismatch");
  }
  return (normalize_global_phase(a) - normalize_global_phase(b)).cwiseAbs().maxCoeff();
}

}  // namespace starsense
