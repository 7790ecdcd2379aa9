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

// Slow reference implementations used only by the tests: explicit Kronecker
// products, matrix exponentials and the dense Lindblad superoperator.

#include <random>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "starsense/noise.hpp"
#include "starsense/spin_system.hpp"
#include "starsense/state.hpp"

namespace starsense::oracle {

inline Matrix kron_all(const std::vector<Matrix>& factors) {
  Matrix out = Matrix::Ones(1, 1);
  for (const auto& f : factors) out = Eigen::kroneckerProduct(out, f).eval();
  return out;
}

// `local` on factor k of n, identity elsewhere.
inline Matrix on_spin(std::size_t n, std::size_t k, const Matrix& local) {
  std::vector<Matrix> f(n, Matrix::Identity(2, 2));
  f[k] = local;
  return kron_all(f);
}

inline Matrix sz_op(std::size_t n, std::size_t k) { return on_spin(n, k, Matrix(pauli(Axis::z))); }

// Weak-coupling Hamiltonian from Pauli sums, all spins at the given offsets.
inline Matrix hamiltonian(const SpinSystem& s, const std::vector<double>& offsets) {
  const std::size_t n = s.size();
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(s.dim()), static_cast<Eigen::Index>(s.dim()));
  for (std::size_t j = 0; j < n; ++j) h += offsets[j] * sz_op(n, j) / 2.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) h += s.coupling(j, k) * sz_op(n, j) * sz_op(n, k) / 4.0;
  }
  return h;
}

inline Matrix expm(const Matrix& m) { return m.exp(); }

// Column-stacking vectorisation: vec(A X B) = (B^T kron A) vec(X).
inline Matrix lindblad_superoperator(const Matrix& h, const std::vector<Matrix>& jumps) {
  const auto d = h.rows();
  const Matrix id = Matrix::Identity(d, d);
  Matrix l = -kI * (Eigen::kroneckerProduct(id, h).eval() - Eigen::kroneckerProduct(h.transpose(), id).eval());
  for (const auto& j : jumps) {
    const Matrix jdj = j.adjoint() * j;
    l += Eigen::kroneckerProduct(j.conjugate(), j).eval();
    l -= 0.5 * Eigen::kroneckerProduct(id, jdj).eval();
    l -= 0.5 * Eigen::kroneckerProduct(jdj.transpose(), id).eval();
  }
  return l;
}

inline std::vector<Matrix> flip_jumps(std::size_t n, const std::vector<double>& rates) {
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < n; ++k) {
    LindbladChannel ch{k, rates[k]};
    for (const auto& j : ch.jump_operators()) out.push_back(on_spin(n, k, Matrix(j)));
  }
  return out;
}

inline Matrix apply_superoperator(const Matrix& super, const Matrix& rho) {
  const auto d = rho.rows();
  Vector v = Eigen::Map<const Vector>(rho.data(), d * d);
  Vector w = super * v;
  return Eigen::Map<Matrix>(w.data(), d, d);
}

inline Matrix random_state(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
  }
  Matrix rho = a * a.adjoint();
  return rho / rho.trace();
}

inline Matrix random_unitary(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ();
}

// The pseudo-CNOT as printed: identity on the CC = 0 block, i times the
// anti-diagonal on the CC = 1 block.
inline Matrix cnot_reference() {
  Matrix m = Matrix::Zero(8, 8);
  for (int k = 0; k < 4; ++k) {
    m(k, k) = 1.0;
    m(4 + k, 7 - k) = kI;
  }
  return m;
}

// Final state of the field-on-CS measurement, CC CS1 CS2 ordering.
inline Matrix side_field_state(double theta) {
  Matrix r = Matrix::Identity(8, 8);
  const Complex e2 = std::exp(kI * (2.0 * theta));
  r(0, 4) = std::conj(e2);
  r(4, 0) = e2;
  r(3, 7) = e2;
  r(7, 3) = std::conj(e2);
  r(1, 5) = r(5, 1) = r(2, 6) = r(6, 2) = 1.0;
  return r / 8.0;
}

// Final state of the field-on-CC measurement.
inline Matrix center_field_state(double theta) {
  Matrix r = Matrix::Identity(8, 8);
  const Complex e = std::exp(kI * theta);
  for (int i = 0; i < 4; ++i) {
    r(i, i + 4) = std::conj(e);
    r(i + 4, i) = e;
  }
  return r / 8.0;
}

// CC, CS1, CS2 of the built-in molecule.
inline SpinSystem three_carbons() { return two_propanol().without({"HC", "HS1", "HS2", "HS3", "HS4", "HS5", "HS6"}); }

}  // namespace starsense::oracle
